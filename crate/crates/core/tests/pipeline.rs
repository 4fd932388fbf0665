use std::fs;
use std::path::Path;
use std::process::Command;

use sheath::fixpoint::picard::{evolve_interface, presheath, target_density};
use sheath::fixpoint::{picard_step, run_fixed_point, write_snapshots, Profile, RunConfig, RunContext, RunStatus};
use sheath::characteristics::GridVelocity;
use sheath::geometry::GridField;

fn small() -> RunConfig {
    let mut c = RunConfig::desk();
    c.n_r = 12;
    c.n_beta = 32;
    c.n_t = 4;
    c.dt = 2e-3;
    c
}

fn sup_diff(a: &GridField<[f64; 2]>, b: &GridField<[f64; 2]>) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1]))
        .fold(0.0, f64::max)
}

#[test]
fn degenerate_data_gives_zero_presheath_and_unit_inflow() {
    let mut c = small();
    c.profiles.n0 = Profile::Constant { value: 0.0 };
    c.profiles.g = Profile::Constant { value: 0.0 };
    c.profiles.g_t = Profile::Constant { value: 0.0 };
    c.profiles.ns0 = Profile::Constant { value: 1.0 };
    let ctx = RunContext::new(c).unwrap();
    let v0 = ctx.initial_velocity().unwrap();
    let s = picard_step(&v0, &ctx).unwrap();
    assert!(s.ring_density.iter().flatten().all(|&n| n == 0.0));
    for z in &s.zeta {
        assert_eq!(z.a0, 0.0);
        assert!(z.a.iter().chain(&z.b).all(|&c| c == 0.0));
    }
    assert!(s.interface.vtilde.iter().flatten().all(|&v| v == -1.0));
    // initial-slab nodes carry zero density
    for (sl, tags) in s.n.slices.iter().zip(&s.n.tags) {
        for (v, t) in sl.values.iter().zip(tags) {
            if *t == sheath::transport::Region::Initial {
                assert_eq!(*v, 0.0);
            }
        }
    }
    // a second application from the same iterate is reproduced exactly
    let again = picard_step(&v0, &ctx).unwrap();
    assert_eq!(sup_diff(&again.next, &s.next), 0.0);
}

#[test]
fn radial_data_keeps_first_stages_symmetric() {
    let mut c = small();
    c.profiles.r0 = Profile::Constant { value: 1.5 };
    c.profiles.ns0 = Profile::Constant { value: 1.2 };
    c.profiles.g_t = Profile::Constant { value: -1.5 };
    let ctx = RunContext::new(c).unwrap();
    let v = GridVelocity::new(ctx.initial_velocity().unwrap());
    let ring = target_density(&v, &ctx).unwrap();
    for level in &ring {
        let m = level[0];
        assert!(level.iter().all(|x| (x - m).abs() <= 1e-12 * m.abs()), "{level:?}");
    }
    let zeta = presheath(&v, &ring, &ctx).unwrap();
    for z in &zeta {
        let tail = z.a.iter().chain(&z.b).fold(0.0f64, |m, c| m.max(c.abs()));
        assert!(tail <= 1e-12 * z.a0.abs().max(1.0), "{tail}");
    }
    let h = evolve_interface(&zeta, &ctx).unwrap();
    let v0 = &h.vtilde[0];
    assert!(v0.iter().all(|x| (x - v0[0]).abs() <= 1e-12));
}

#[test]
fn short_horizon_step_is_order_t() {
    let horizons = [4e-3, 2e-3, 1e-3];
    let d: Vec<f64> = horizons
        .iter()
        .map(|&t| {
            let mut c = small();
            c.domain.t_final = t;
            c.n_t = 1;
            c.dt = t / 4.0;
            let ctx = RunContext::new(c).unwrap();
            let s1 = picard_step(&ctx.initial_velocity().unwrap(), &ctx).unwrap();
            let s2 = picard_step(&s1.next, &ctx).unwrap();
            sup_diff(&s2.next, &s1.next)
        })
        .collect();
    // at least first order: halving T at least (nearly) halves the distance
    assert!(d.windows(2).all(|w| w[0] / w[1] >= 1.8), "{d:?}");
    assert!(d.iter().zip(&horizons).all(|(x, t)| x / t <= 1.0), "{d:?}");
}

fn read_dir_sorted(p: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(p)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn runs_are_byte_identical_and_fixed_point_holds() {
    let mut c = small();
    c.picard_tol = 1e-9;
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let first = run_fixed_point(c.clone()).unwrap();
    write_snapshots(&a, &first).unwrap();
    let second = run_fixed_point(c.clone()).unwrap();
    write_snapshots(&b, &second).unwrap();
    assert_eq!(read_dir_sorted(&a), read_dir_sorted(&b));

    assert_eq!(first.report.status, RunStatus::Converged);
    let d = first.report.distances();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    let more = picard_step(&first.last.next, &first.context).unwrap();
    assert!(sup_diff(&more.next, &first.last.next) <= 2.0 * c.picard_tol);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sheath"))
}

#[test]
fn cli_exit_codes_and_export_header() {
    let tmp = tempfile::tempdir().unwrap();
    let st = bin().args(["run", "missing.json"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let st = bin().args(["verify", "no_such_suite"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let st = bin().args(["verify", "gronwall"]).status().unwrap();
    assert_eq!(st.code(), Some(0));

    let mut c = small();
    c.picard_max_iters = 2;
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, serde_json::to_string(&c).unwrap()).unwrap();
    let out = tmp.path().join("run1");
    let st = bin()
        .args(["--threads", "2", "run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    for f in ["report.json", "interface.csv", "density_t0.json", "phi_t4.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let o = bin().arg("export").arg(&out).args(["--what", "interface"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("t,beta,r,theta,ns,vtilde"));
    let o = bin().arg("export").arg(&out).args(["--what", "residuals"]).output().unwrap();
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);

    // a stage failure is a run error, exit 1
    let mut bad = small();
    bad.profiles.g_t = Profile::Constant { value: 400.0 };
    bad.domain.t_final = 0.4;
    fs::write(&cfg, serde_json::to_string(&bad).unwrap()).unwrap();
    let o = bin().arg("run").arg(&cfg).arg("--out").arg(tmp.path().join("bad")).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("interface"));
}
