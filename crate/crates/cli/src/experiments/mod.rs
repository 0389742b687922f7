//! The fifteen named experiments, in catalog order.

use anyhow::Result;

use crate::params::{Params, Value};
use crate::report::Outcome;

mod barrier;
mod convex;
mod jacobi;
mod kernel;
mod rotation;
mod solitons;

pub type Defaults = fn() -> Vec<(&'static str, Value)>;
pub type RunFn = fn(&Params, u64, &mut Outcome) -> Result<()>;

pub struct Experiment {
    pub name: &'static str,
    /// Neutral pointer to the statement being exercised.
    pub anchor: &'static str,
    pub defaults: Defaults,
    pub run: RunFn,
}

impl Experiment {
    pub fn params(&self) -> Params {
        Params::from_defaults(&(self.defaults)())
    }
}

pub static CATALOG: [Experiment; 15] = [
    Experiment {
        name: "bowl-ode",
        anchor: "rotational translator profile: gradient, height and curvature bounds",
        defaults: solitons::bowl_ode_defaults,
        run: solitons::bowl_ode,
    },
    Experiment {
        name: "tip-ratio",
        anchor: "translator curvature ratio as a function of scaled distance to the tip line",
        defaults: solitons::tip_ratio_defaults,
        run: solitons::tip_ratio,
    },
    Experiment {
        name: "blowdown",
        anchor: "parabolic blow-down of the three-dimensional translator to the round cylinder",
        defaults: solitons::blowdown_defaults,
        run: solitons::blowdown,
    },
    Experiment {
        name: "symmetry-check",
        anchor: "epsilon-symmetry of the shrinking cylinder and the weighted mode-zero identity",
        defaults: rotation::symmetry_defaults,
        run: rotation::symmetry_check,
    },
    Experiment {
        name: "alignment-scaling",
        anchor: "linear growth of the misalignment of two nearly symmetric rotation fields",
        defaults: rotation::alignment_defaults,
        run: rotation::alignment_scaling,
    },
    Experiment {
        name: "rigidity",
        anchor: "rotation fields tangent to the cylinder and to the translator times a line",
        defaults: rotation::rigidity_defaults,
        run: rotation::rigidity,
    },
    Experiment {
        name: "mode-decay",
        anchor: "Fourier modes of the cylinder Jacobi equation under parabolic rescaling",
        defaults: jacobi::mode_decay_defaults,
        run: jacobi::mode_decay,
    },
    Experiment {
        name: "neck-improvement",
        anchor: "improvement of symmetry on the perturbed shrinking cylinder",
        defaults: jacobi::neck_defaults,
        run: jacobi::neck_improvement,
    },
    Experiment {
        name: "kernel-mass",
        anchor: "Dirichlet heat kernel of a square: symmetry, boundary values and total mass",
        defaults: kernel::mass_defaults,
        run: kernel::kernel_mass,
    },
    Experiment {
        name: "kernel-flux",
        anchor: "boundary flux of the Dirichlet heat kernel at short times",
        defaults: kernel::flux_defaults,
        run: kernel::kernel_flux,
    },
    Experiment {
        name: "barrier-conditions",
        anchor: "weight conditions and negativity of the barrier evolution coefficient",
        defaults: barrier::conditions_defaults,
        run: barrier::barrier_conditions,
    },
    Experiment {
        name: "barrier-maxprinciple",
        anchor: "maximum principle for the barrier equation and the assembled boundary bound",
        defaults: barrier::maxprinciple_defaults,
        run: barrier::barrier_maxprinciple,
    },
    Experiment {
        name: "diameters",
        anchor: "intrinsic versus extrinsic diameter of convex hypersurfaces",
        defaults: convex::diameters_defaults,
        run: convex::diameters,
    },
    Experiment {
        name: "cross-section",
        anchor: "level-set cross sections of a slightly tilted round cylinder",
        defaults: convex::section_defaults,
        run: convex::cross_section,
    },
    Experiment {
        name: "entropy-table",
        anchor: "Gaussian entropy of round shrinking cylinders",
        defaults: convex::entropy_defaults,
        run: convex::entropy_table,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    CATALOG.iter().find(|e| e.name == name)
}

/// Evenly strided row indices, always including the last.
pub(crate) fn stride(len: usize, max_rows: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let step = len.div_ceil(max_rows.max(1)).max(1);
    let mut idx: Vec<usize> = (0..len).step_by(step).collect();
    if *idx.last().unwrap() != len - 1 {
        idx.push(len - 1);
    }
    idx
}

pub(crate) fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}
