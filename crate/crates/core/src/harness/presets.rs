//! Built-in experiments, named after the plot each one feeds. Every preset
//! runs at full size; [`ExperimentSpec::scaled`] shrinks them for quick runs.

use super::spec::{AcceptanceRule, Axis, ExperimentSpec, Grid, OutputKind, Realizations, SchemeDefaults, Starts};
use crate::diagnostics::PLEFKA_MAX;
use crate::disorder::{OnsagerMode, StartShape};
use crate::dynamics::{Scheme, TwoStepInit};
use crate::error::{Error, Result};
use crate::registry::DEFAULT_DEDUP_THRESHOLD;

/// Two-step replica-symmetry-breaking free energy at β = 3, h = 0.5 (same
/// sign convention as the RS value), computed offline; fixed points with a
/// TAP free energy above it are spurious.
pub const RSB2_REFERENCE_BETA3_H05: f64 = 1.66270;

const DISORDER_SEED: u64 = 0x5EED_0001;
const START_SEED: u64 = 0x5EED_0002;

fn base(
    name: &str,
    description: &str,
    grid: Grid,
    realizations: u64,
    starts: u64,
    shape: StartShape,
) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        description: description.into(),
        onsager_mode: OnsagerMode::LimitingQ,
        plefka_max: PLEFKA_MAX,
        dedup_threshold: DEFAULT_DEDUP_THRESHOLD,
        outputs: vec![OutputKind::Diagnostics],
        trace_every: 1,
        reference_fe: None,
        budget: super::spec::DEFAULT_BUDGET,
        grid,
        realizations: Realizations { count: realizations, base_seed: DISORDER_SEED },
        starts: Starts { count: starts, base_seed: START_SEED, shape },
        scheme_config: SchemeDefaults::default(),
        acceptance: AcceptanceRule::low_temperature(),
    }
}

fn grid(n: Vec<usize>, beta: Axis, h: Axis, epsilon: Axis, scheme: Vec<Scheme>) -> Grid {
    Grid { n, beta, h, epsilon, scheme }
}

fn range(start: f64, step: f64, count: usize) -> Axis {
    Axis::Range { start, step, count }
}

fn list(v: &[f64]) -> Axis {
    Axis::List(v.to_vec())
}

fn low_temperature(name: &str, description: &str, epsilon: Axis, realizations: u64, starts: u64) -> ExperimentSpec {
    let mut s = base(
        name,
        description,
        grid(vec![25], list(&[3.0]), list(&[0.5]), epsilon, vec![Scheme::EpsilonBanach]),
        realizations,
        starts,
        StartShape::Corners,
    );
    s.onsager_mode = OnsagerMode::EmpiricalQN;
    s.outputs = vec![OutputKind::Diagnostics, OutputKind::Census];
    s.reference_fe = Some(RSB2_REFERENCE_BETA3_H05);
    s
}

pub fn builtin_presets() -> Vec<ExperimentSpec> {
    let mut out = Vec::new();

    let mut fig1 = base(
        "fig1_banach_divergence",
        "Plain Banach iteration, N=25, h=0.5, beta in [0, 1.5], one disorder realization, 20 uniform starts, \
         1000 iterations. Columns beta vs mse_final; trace.csv holds mse per iteration.",
        grid(vec![25], range(0.0, 0.05, 31), list(&[0.5]), Axis::default(), vec![Scheme::Banach]),
        1,
        20,
        StartShape::FullCube,
    );
    fig1.outputs = vec![OutputKind::Diagnostics, OutputKind::Trace];
    fig1.trace_every = 10;
    out.push(fig1);

    let mut fig2 = base(
        "fig2_epsilon_calibration",
        "epsilon-Banach for epsilon = -0.9, -0.85, ..., 0.9 and the two-step scheme at beta=1, h=0.5, N=25, \
         1000 uniform starts. Good: TAP free energy within 0.05 of the RS value, mse < 1e-4, Plefka <= 1. \
         Columns epsilon vs tap_fe / good.",
        grid(vec![25], list(&[1.0]), list(&[0.5]), range(-0.9, 0.05, 37), vec![Scheme::EpsilonBanach, Scheme::TwoStep]),
        1,
        1000,
        StartShape::FullCube,
    );
    fig2.onsager_mode = OnsagerMode::EmpiricalQN;
    fig2.acceptance = AcceptanceRule::rs_window();
    out.push(fig2);

    let mut fig4 = base(
        "fig4_jacobian_spectrum",
        "Two-step iteration to k=50 at beta=0.8, h=0.05, N=1000, one realization; eigenvalues of the Jacobian \
         at the final iterate (spectra.json) against the edge -2 beta - beta^2 (1-q).",
        grid(vec![1000], list(&[0.8]), list(&[0.05]), Axis::default(), vec![Scheme::TwoStep]),
        1,
        1,
        StartShape::FullCube,
    );
    fig4.outputs = vec![OutputKind::Diagnostics, OutputKind::Spectrum];
    fig4.scheme_config = SchemeDefaults { max_iters: 50, mae_target: 1e-7, two_step_init: TwoStepInit::SqrtQ };
    out.push(fig4);

    out.push(low_temperature(
        "fig5_negative_epsilon",
        "beta=3, h=0.5, N=25, 1000 realizations x 500 corner starts, epsilon = -0.705 - 0.001 j, j=0..20. \
         Accepted: mae <= 1e-7, inside the cube, Plefka <= 1. Histogram of tap_fe against the 2RSB line.",
        range(-0.705, -0.001, 21),
        1000,
        500,
    ));
    out.push(low_temperature(
        "fig5_positive_epsilon",
        "As fig5_negative_epsilon with epsilon = 0.705 + 0.001 j, j=0..20; accepted fixed points to the right \
         of the 2RSB line are spurious.",
        range(0.705, 0.001, 21),
        1000,
        500,
    ));
    out.push(low_temperature(
        "fig6_census_small",
        "Low-temperature census, 100 realizations x 50 corner starts, epsilon = -0.705 - 0.001 j, j=0..20; \
         per-realization distinct-solution counts in census.json.",
        range(-0.705, -0.001, 21),
        100,
        50,
    ));
    out.push(low_temperature(
        "fig7_census",
        "Low-temperature census, 1000 realizations x 500 corner starts, epsilon = -0.705 - 0.001 j, j=0..20.",
        range(-0.705, -0.001, 21),
        1000,
        500,
    ));
    out.push(low_temperature(
        "fig8_census_fine",
        "Finer epsilon mesh: epsilon = -0.505 + 0.001 k, k=0..250, 1000 realizations x 500 corner starts.",
        range(-0.505, 0.001, 251),
        1000,
        500,
    ));

    for shape in [StartShape::FullCube, StartShape::Corners] {
        let mut s = base(
            &format!("supp4_banach_grid_{}", shape.as_str()),
            "Banach stability grid: N in {10,25,100,500,1000}, h in {0,0.5,1}, beta in [0, 1.5], one realization, \
             one start per cell, 1000 iterations. Columns beta vs mae_final / mse_final.",
            grid(
                vec![10, 25, 100, 500, 1000],
                range(0.0, 0.05, 31),
                list(&[0.0, 0.5, 1.0]),
                Axis::default(),
                vec![Scheme::Banach],
            ),
            1,
            1,
            shape,
        );
        s.scheme_config.mae_target = f64::MIN_POSITIVE;
        out.push(s);
    }

    for shape in [StartShape::FullCube, StartShape::Corners] {
        let mut s = base(
            &format!("supp6_epsilon_sweep_{}", shape.as_str()),
            "epsilon-Banach sweep: epsilon in {-0.9,-0.7,-0.45,0.45,0.7,0.9}, beta in [0, 5], N in \
             {10,25,100,500,1000}, h in {0,0.5,1}; the same start for every beta. Columns beta vs mse_final.",
            grid(
                vec![10, 25, 100, 500, 1000],
                range(0.0, 0.05, 101),
                list(&[0.0, 0.5, 1.0]),
                list(&[-0.9, -0.7, -0.45, 0.45, 0.7, 0.9]),
                vec![Scheme::EpsilonBanach],
            ),
            1,
            1,
            shape,
        );
        s.onsager_mode = OnsagerMode::EmpiricalQN;
        s.scheme_config.mae_target = f64::MIN_POSITIVE;
        out.push(s);
    }

    let mut starts = low_temperature(
        "supp_low_temperature_starts",
        "Start-value dependence at beta=3, h=0.5: epsilon in {-0.9,-0.7,-0.45,0.45,0.7,0.9} and the two-step \
         scheme, N in {10,25,100,500}, 1000 uniform starts shared by all schemes.",
        list(&[-0.9, -0.7, -0.45, 0.45, 0.7, 0.9]),
        1,
        1000,
    );
    starts.grid.n = vec![10, 25, 100, 500];
    starts.grid.scheme = vec![Scheme::EpsilonBanach, Scheme::TwoStep];
    starts.starts.shape = StartShape::FullCube;
    starts.outputs = vec![OutputKind::Diagnostics];
    out.push(starts);

    out
}

pub fn preset(name: &str) -> Result<ExperimentSpec> {
    builtin_presets().into_iter().find(|p| p.name == name).ok_or_else(|| Error::UnknownPreset(name.to_string()))
}
