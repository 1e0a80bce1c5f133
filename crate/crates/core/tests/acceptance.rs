//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero when any of them fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use confine::assembly::{
    assemble_box, assemble_coupled, assemble_separating, decoupling_check, hermiticity_defect,
    projection_commutator_norm, HamiltonianMatrix,
};
use confine::bc::{CouplingSpec, PointCoupling, SeparatedBc, SideCondition};
use confine::distributional::{in_domain, BoundaryPotentialSpec, PotentialSpec};
use confine::dynamics::{crank_nicolson_evolve, gaussian_packet};
use confine::extensions::{classify, deficiency_report, ExtensionClass};
use confine::grid::{Block, Decomposition, GammaPoint, Region, Side, WaveFunction};
use confine::spectral::{eigensolve, reference_spectrum_uniform, EndCondition, Support};
use confine::traces::{trace_normal_derivative, trace_value};
use confine::C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Dec = Decomposition<f64>;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn unit_box() -> Dec {
    Decomposition::new(1.0, 1000, 0.25, 0.75).unwrap()
}

fn decoupling_conditions() -> Vec<(&'static str, SeparatedBc<f64>)> {
    use SideCondition::*;
    vec![
        ("dirichlet", SeparatedBc::uniform(Dirichlet)),
        ("neumann", SeparatedBc::uniform(Neumann)),
        ("robin(1,1)", SeparatedBc::uniform(Robin(1.0))),
        ("robin(2,-1)", SeparatedBc::new((Robin(2.0), Robin(-1.0)), (Robin(2.0), Robin(-1.0)))),
    ]
}

fn interior_levels(hm: &HamiltonianMatrix<f64>, count: usize) -> Vec<f64> {
    let res = eigensolve(hm, count).unwrap();
    res.eigenvalues
        .iter()
        .zip(&res.support)
        .filter(|(_, s)| **s == Support::Block(Block::Interior))
        .map(|(l, _)| *l)
        .collect()
}

// 1 ------------------------------------------------------------------------

fn decoupling_identity() -> Verdict {
    let start = Instant::now();
    let d = unit_box();
    let v = PotentialSpec::Harmonic { omega: 3.0, center: 0.5 };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_singular = 0.0f64;
    let mut worst_action = 0.0f64;
    for (_, bc) in decoupling_conditions() {
        let hm = assemble_separating(&d, &v, &bc).unwrap();
        for _ in 0..100 {
            let psi = bc.sample_member(&d, &mut rng).unwrap();
            let c = decoupling_check(&d, &v, &bc, &hm, &psi).unwrap();
            worst_singular = worst_singular.max(c.singular_relative);
            worst_action = worst_action.max(c.action_relative);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst_singular <= 1e-10 && worst_action <= 1e-12 && secs < 10.0,
        format!("singular/scale max {worst_singular:.3e} (<=1e-10), action rel max {worst_action:.3e} (<=1e-12), {secs:.2}s (<10s)"),
    )
}

// 2 ------------------------------------------------------------------------

/// Perturbation changing exactly one trace of one side: `γ̂⁰` (with the
/// next node shifted by 3/4 so `γ̂¹` is unchanged) or `γ̂¹` (next node only).
fn trace_perturbation(d: &Dec, p: GammaPoint, side: Side, derivative: bool) -> WaveFunction<f64> {
    let mut e = WaveFunction::zeros(d);
    let (k, inward) = d.gamma_local(p, side);
    let block = d.block_at(p, side);
    let next = (k as isize + inward) as usize;
    if derivative {
        e.block_mut(block)[next] = C::new(1.0, 0.0);
    } else {
        e.block_mut(block)[k] = C::new(1.0, 0.0);
        e.block_mut(block)[next] = C::new(0.75, 0.0);
    }
    e
}

/// Direct trace test of the separated conditions, relative to the traces' size.
fn satisfies(d: &Dec, psi: &WaveFunction<f64>, bc: &SeparatedBc<f64>) -> bool {
    GammaPoint::ALL.iter().all(|&p| {
        Side::ALL.iter().all(|&s| {
            let g0 = trace_value(d, psi, p, s).unwrap();
            let g1 = trace_normal_derivative(d, psi, p, s).unwrap();
            let scale = g0.norm() + d.h() * g1.norm() + 1.0;
            match bc.at(p, s) {
                SideCondition::Dirichlet => g0.norm() <= 1e-12 * scale,
                SideCondition::Neumann => d.h() * g1.norm() <= 1e-12 * scale,
                SideCondition::Robin(f) => d.h() * (g1 - g0 * f).norm() <= 1e-12 * scale,
            }
        })
    })
}

fn domain_characterization() -> Verdict {
    let d: Dec = Decomposition::new(1.0, 200, 0.25, 0.75).unwrap();
    let v = PotentialSpec::Constant(1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0usize;
    let mut mismatches = Vec::new();
    for (name, bc) in decoupling_conditions() {
        let spec = BoundaryPotentialSpec::from_separated(&bc);
        let base = bc.sample_member(&d, &mut rng).unwrap();
        let mut basis = Vec::new();
        for p in GammaPoint::ALL {
            for s in Side::ALL {
                for derivative in [false, true] {
                    basis.push((p, s, derivative, trace_perturbation(&d, p, s, derivative)));
                }
            }
        }
        assert_eq!(basis.len(), 8);
        for mask in 0u32..256 {
            let mut psi = base.clone();
            let mut predicted = true;
            for (bit, (p, s, derivative, e)) in basis.iter().enumerate() {
                if mask & (1 << bit) == 0 {
                    continue;
                }
                let coeff = C::new(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0));
                psi = psi.axpy(coeff, e);
                // a trace perturbation violates the side's condition exactly
                // when the condition constrains that trace
                predicted &= match bc.at(*p, *s) {
                    SideCondition::Dirichlet => *derivative,
                    SideCondition::Neumann => !*derivative,
                    SideCondition::Robin(_) => false,
                };
            }
            let direct = satisfies(&d, &psi, &bc);
            let check = in_domain(&d, &psi, &v, &spec, 1e-12).unwrap();
            checked += 1;
            if check.inside != predicted || direct != predicted {
                mismatches.push(format!("{name} mask {mask:08b}: in_domain {} direct {direct} predicted {predicted}", check.inside));
            }
        }
    }
    verdict(
        mismatches.is_empty(),
        format!("{checked} perturbation patterns over 4 conditions x 8 trace basis vectors, {} mismatches {:?}", mismatches.len(), mismatches.first()),
    )
}

// 3 ------------------------------------------------------------------------

fn configuration_matrix() -> Vec<(String, CouplingSpec<f64>, PotentialSpec<f64>)> {
    use PointCoupling::*;
    use SideCondition::*;
    let sep = |s1, s2| Separated { side1: s1, side2: s2 };
    let couplings = [
        ("dirichlet", CouplingSpec::uniform(sep(Dirichlet, Dirichlet))),
        ("neumann", CouplingSpec::uniform(sep(Neumann, Neumann))),
        ("robin(1,1)", CouplingSpec::uniform(sep(Robin(1.0), Robin(1.0)))),
        ("robin(2,-1)", CouplingSpec::uniform(sep(Robin(2.0), Robin(-1.0)))),
        ("dirichlet|neumann", CouplingSpec::new(sep(Dirichlet, Neumann), sep(Neumann, Dirichlet))),
        ("robin(-3)|dirichlet", CouplingSpec::new(sep(Robin(-3.0), Dirichlet), sep(Dirichlet, Robin(0.5)))),
        ("transparent", CouplingSpec::uniform(Transparent)),
        ("delta(1)", CouplingSpec::uniform(Delta(1.0))),
        ("delta(-5)|transparent", CouplingSpec::new(Delta(-5.0), Transparent)),
        ("delta_prime(0.5)|delta(2)", CouplingSpec::new(DeltaPrime(0.5), Delta(2.0))),
    ];
    let potentials = [
        ("V=0", PotentialSpec::Zero),
        ("V=harmonic", PotentialSpec::Harmonic { omega: 4.0, center: 0.45 }),
    ];
    let mut out = Vec::new();
    for (cn, c) in couplings {
        for (pn, p) in &potentials {
            out.push((format!("{cn}, {pn}"), c, p.clone()));
        }
    }
    out
}

fn self_adjointness() -> Verdict {
    let d = unit_box();
    let configs = configuration_matrix();
    let mut worst = 0.0f64;
    let mut worst_name = String::new();
    for (name, c, v) in &configs {
        let hm = assemble_coupled(&d, v, c).unwrap();
        let defect = hermiticity_defect(&hm);
        if defect >= worst {
            worst = defect;
            worst_name = name.clone();
        }
    }
    verdict(
        configs.len() == 20 && worst <= 1e-12,
        format!("{} configurations, max defect {worst:.3e} ({worst_name}) (<=1e-12)", configs.len()),
    )
}

// 4 ------------------------------------------------------------------------

fn confinement() -> Verdict {
    let start = Instant::now();
    let d: Dec = Decomposition::new(1.0, 2000, 0.25, 0.75).unwrap();
    let ih2 = 1.0 / (d.h() * d.h());
    let mut notes = Vec::new();
    let mut pass = true;

    for (name, c, v) in configuration_matrix() {
        let hm = assemble_coupled(&d, &v, &c).unwrap();
        let m = projection_commutator_norm(&hm);
        match classify(&c) {
            ExtensionClass::Separating => {
                if m != 0.0 {
                    pass = false;
                    notes.push(format!("{name}: commutator {m:e} != 0"));
                }
            }
            ExtensionClass::Transversal => {
                let strong = GammaPoint::ALL
                    .iter()
                    .any(|p| matches!(c.at(*p), PointCoupling::Transparent | PointCoupling::Delta(_)));
                if strong && m < ih2 {
                    pass = false;
                    notes.push(format!("{name}: commutator {m:e} < 1/h^2"));
                }
            }
        }
    }
    let mut ratios = Vec::new();
    for c in [PointCoupling::Transparent, PointCoupling::Delta(1.0)] {
        let hm = assemble_coupled(&d, &PotentialSpec::Zero, &CouplingSpec::uniform(c)).unwrap();
        ratios.push(projection_commutator_norm(&hm) / ih2);
    }
    // the stencil's crossing entries are exactly 1/h^2, so equality is the sharp bound
    pass &= ratios.iter().all(|r| *r >= 1.0);
    notes.push(format!("commutator*h^2 transparent {:e}, delta {:e} (>=1)", ratios[0], ratios[1]));

    // packet 0.2 from b, moving toward it
    let packet = gaussian_packet(&d, d.b() - 0.2, 0.05, 20.0, Region::Omega1).unwrap();
    let mut worst_sep = 0.0f64;
    for (_, bc) in decoupling_conditions() {
        let hm = assemble_separating(&d, &PotentialSpec::Zero, &bc).unwrap();
        let tr = crank_nicolson_evolve(&hm, &packet, 1e-5, 5000).unwrap();
        worst_sep = worst_sep.max(tr.max_probability_drift());
    }
    let hm = assemble_coupled(&d, &PotentialSpec::Zero, &CouplingSpec::uniform(PointCoupling::Delta(1.0))).unwrap();
    let leak = crank_nicolson_evolve(&hm, &packet, 1e-5, 5000).unwrap().max_probability_drift();
    let secs = start.elapsed().as_secs_f64();
    pass &= worst_sep <= 1e-9 && leak >= 0.01 && secs < 60.0;
    notes.push(format!("separating |p(t)-p(0)| max {worst_sep:.3e} (<=1e-9), delta(1) leak {leak:.4} (>=0.01), {secs:.2}s (<60s)"));
    verdict(pass, notes.join("; "))
}

// 5 ------------------------------------------------------------------------

fn agreement_with_free_operator() -> Verdict {
    let d = unit_box();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let table: Vec<f64> = (0..=d.node_count()).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let mut all_equal = true;
    for v in [
        PotentialSpec::Zero,
        PotentialSpec::Constant(-2.0),
        PotentialSpec::Harmonic { omega: 6.0, center: 0.3 },
        PotentialSpec::Table(table),
    ] {
        let t = assemble_coupled(&d, &v, &CouplingSpec::uniform(PointCoupling::Transparent)).unwrap();
        let b = assemble_box(&d, &v).unwrap();
        all_equal &= t.matrix() == b.matrix() && t.weights() == b.weights();
    }
    verdict(all_equal, "transparent coupling vs box operator, 4 potentials, exact entry equality")
}

// 6 ------------------------------------------------------------------------

fn spectral_accuracy() -> Verdict {
    let dirichlet = SeparatedBc::uniform(SideCondition::Dirichlet);
    let exact = 4.0 * PI * PI;

    let d: Dec = Decomposition::new(1.0, 2000, 0.25, 0.75).unwrap();
    let hm = assemble_separating(&d, &PotentialSpec::Zero, &dirichlet).unwrap();
    let l1 = interior_levels(&hm, 1)[0];
    let rel1 = (l1 - exact).abs() / exact;

    // L = 1.25 keeps a = 0.25 and b = 0.75 on the grid for every N in the sweep
    let mut pts = Vec::new();
    for n in [250usize, 500, 1000, 2000] {
        let d: Dec = Decomposition::new(1.25, n, 0.25, 0.75).unwrap();
        let hm = assemble_separating(&d, &PotentialSpec::Zero, &dirichlet).unwrap();
        let l = interior_levels(&hm, 1)[0];
        pts.push((d.h().ln(), ((l - exact).abs() / exact).ln()));
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let slope = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / pts.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>();

    let hm = assemble_separating(&d, &PotentialSpec::Zero, &SeparatedBc::uniform(SideCondition::Neumann)).unwrap();
    let l0 = interior_levels(&hm, 1)[0];

    let want = reference_spectrum_uniform(EndCondition::Robin(1.0), 0.5, 1).unwrap()[0];
    let d4: Dec = Decomposition::new(1.0, 4000, 0.25, 0.75).unwrap();
    let hm = assemble_separating(&d4, &PotentialSpec::Zero, &SeparatedBc::uniform(SideCondition::Robin(1.0))).unwrap();
    let lr = interior_levels(&hm, 3)[0];
    let rel_r = (lr - want).abs() / want.abs();

    verdict(
        rel1 <= 1e-5 && (slope - 2.0).abs() <= 0.1 && l0.abs() <= 1e-12 && rel_r <= 1e-6,
        format!(
            "dirichlet lambda1 rel err {rel1:.3e} (<=1e-5), slope {slope:.4} (2+-0.1), neumann lambda0 {l0:.3e} (|.|<=1e-12), robin(1) lambda1 {lr:.10} vs {want:.10} rel {rel_r:.3e} (<=1e-6)"
        ),
    )
}

// 7 ------------------------------------------------------------------------

fn deficiency_indices() -> Verdict {
    let d: Dec = Decomposition::new(1.0, 200, 0.25, 0.75).unwrap();
    let r = deficiency_report(&d, &PotentialSpec::Harmonic { omega: 2.0, center: 0.5 }).unwrap();
    let per: Vec<(Block, usize, usize)> = r.components.iter().map(|(b, _, x)| (*b, x.m_plus, x.m_minus)).collect();
    let ext_ok = per.iter().filter(|(b, _, _)| *b != Block::Interior).all(|(_, p, m)| (*p, *m) == (1, 1));
    let pass = r.omega1() == (2, 2) && ext_ok && r.total == (4, 4) && r.sum_rule_holds();
    verdict(pass, format!("omega1 {:?}, components {:?}, omega2 {:?}, total {:?}, sum rule {}", r.omega1(), per, r.omega2, r.total, r.sum_rule_holds()))
}

// 8 ------------------------------------------------------------------------

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("robin.json");
    std::fs::write(
        &config,
        r#"{
  "box": {"L": 1.0, "N": 400},
  "omega": {"a": 0.25, "b": 0.75},
  "potential": {"kind": "harmonic", "omega": 3.0, "x0": 0.5},
  "bc": {"point_a": {"side1": {"robin": 2.0}, "side2": {"robin": -1.0}},
         "point_b": {"side1": "neumann", "side2": "dirichlet"}},
  "seed": 99
}"#,
    )
    .unwrap();
    let mut reports = Vec::new();
    let mut codes = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("report{k}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_confine")).arg("verify").arg(&config).arg(&out).status().unwrap();
        codes.push(status.code());
        reports.push(std::fs::read(&out).unwrap());
    }
    let same = reports[0] == reports[1];
    verdict(
        same && codes.iter().all(|c| *c == Some(0)),
        format!("two verify runs, {} bytes each, identical {same}, exit codes {codes:?}", reports[0].len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("decoupling identity", decoupling_identity),
        ("domain characterization", domain_characterization),
        ("self-adjointness", self_adjointness),
        ("confinement", confinement),
        ("agreement with free operator", agreement_with_free_operator),
        ("spectral accuracy", spectral_accuracy),
        ("deficiency indices", deficiency_indices),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            verdict(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        if !v.pass {
            failed += 1;
        }
        println!("criterion {} ({name}): {} - {}", k + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
