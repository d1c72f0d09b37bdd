mod oracles;

use lqg_core::lqr::{
    mayne_murdoch_gain, simulate_closed_loop, solve_dare_lqr, solve_lqr, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use lqg_core::{LqrWeights, LtvSystem, Matrix, Schedule, Vector};
use oracles::{closed_loop_cost, controllability_margin, dare_residual, real_eigenvalues, Gen};
use proptest::prelude::*;

struct Problem {
    a: Matrix,
    b: Matrix,
    q: Matrix,
    r: Matrix,
    qn: Matrix,
    x0: Vector,
    horizon: usize,
}

impl Problem {
    fn random(g: &mut Gen) -> Self {
        let n = g.int(1, 4);
        let m = g.int(1, 2);
        let radius = g.range(0.3, 1.4);
        Problem {
            a: g.with_radius(n, radius),
            b: g.matrix(n, m),
            q: g.psd(n),
            r: g.pd(m),
            qn: g.psd(n),
            x0: g.vector(n),
            horizon: g.int(1, 30),
        }
    }

    fn system(&self) -> LtvSystem {
        LtvSystem::lti_unmeasured(self.a.clone(), self.b.clone(), self.horizon)
    }

    fn weights(&self) -> LqrWeights {
        LqrWeights::constant(self.q.clone(), self.r.clone()).with_terminal(self.qn.clone())
    }

    fn cost(&self, gains: &[Matrix]) -> f64 {
        closed_loop_cost(
            &self.a, &self.b, &self.q, &self.r, &self.qn, gains, &self.x0,
        )
    }
}

#[test]
fn value_function_matches_simulated_cost() {
    let mut g = Gen::new(11);
    for _ in 0..200 {
        let p = Problem::random(&mut g);
        let sol = solve_lqr(&p.system(), &p.weights()).unwrap();
        let simulated = p.cost(&sol.gains);
        let predicted = sol.optimal_cost(&p.x0);
        assert!(
            (simulated - predicted).abs() <= 1e-8 * predicted.abs().max(1.0),
            "{simulated} vs {predicted}"
        );
    }
}

#[test]
fn optimal_schedule_dominates_random_schedules() {
    let mut g = Gen::new(12);
    for _ in 0..20 {
        let p = Problem::random(&mut g);
        let sol = solve_lqr(&p.system(), &p.weights()).unwrap();
        let best = p.cost(&sol.gains);
        for _ in 0..100 {
            let scale = g.range(0.0, 2.0);
            let trial: Vec<Matrix> = sol
                .gains
                .iter()
                .map(|k| k + g.matrix(k.nrows(), k.ncols()) * scale)
                .collect();
            assert!(p.cost(&trial) >= best - 1e-9 * best.abs().max(1.0));
        }
    }
}

#[test]
fn single_entry_gain_perturbation_never_helps() {
    let mut g = Gen::new(13);
    let delta = 1e-4;
    for _ in 0..30 {
        let p = Problem::random(&mut g);
        let sol = solve_lqr(&p.system(), &p.weights()).unwrap();
        let best = p.cost(&sol.gains);
        for k in 0..p.horizon {
            for i in 0..sol.gains[k].nrows() {
                for j in 0..sol.gains[k].ncols() {
                    for sign in [-1.0, 1.0] {
                        let mut trial = sol.gains.clone();
                        trial[k][(i, j)] += sign * delta;
                        assert!(p.cost(&trial) >= best - 1e-10);
                    }
                }
            }
        }
    }
}

#[test]
fn dare_residual_is_small() {
    let mut g = Gen::new(14);
    let mut solved = 0;
    while solved < 50 {
        let n = g.int(1, 4);
        let m = g.int(1, 2);
        let radius = g.range(0.3, 1.3);
        let a = g.with_radius(n, radius);
        let b = g.matrix(n, m);
        if controllability_margin(&a, &b) < 1e-3 {
            continue;
        }
        let q = g.pd(n);
        let r = g.pd(m);
        let s = solve_dare_lqr(&a, &b, &q, &r, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(s.residual <= 10.0 * DEFAULT_TOL, "{}", s.residual);
        let scale = s.p.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let oracle =
            oracles::max_abs_diff(&dare_residual(&a, &b, &q, &r, &s.p), &Matrix::zeros(n, n));
        assert!(oracle <= 1e-8 * scale, "{oracle}");
        assert!(s.closed_loop_spectral_radius < 1.0);
        solved += 1;
    }
}

#[test]
fn mayne_murdoch_places_requested_eigenvalues() {
    let mut g = Gen::new(15);
    for _ in 0..20 {
        let n = g.int(1, 4);
        let distinct = |g: &mut Gen, lo: f64, hi: f64| loop {
            let v: Vec<f64> = (0..n).map(|_| g.range(lo, hi)).collect();
            let spread = v
                .iter()
                .enumerate()
                .flat_map(|(i, x)| v[i + 1..].iter().map(move |y| (x - y).abs()))
                .fold(f64::INFINITY, f64::min);
            if spread > 0.05 {
                return v;
            }
        };
        let open = distinct(&mut g, -1.5, 1.5);
        let desired = distinct(&mut g, -0.9, 0.9);
        let b: Vec<f64> = (0..n)
            .map(|_| {
                let v = g.range(0.2, 2.0);
                if g.uniform() < 0.5 {
                    -v
                } else {
                    v
                }
            })
            .collect();
        let k = mayne_murdoch_gain(&open, &desired, &b).unwrap();
        let a = Matrix::from_diagonal(&Vector::from_vec(open.clone()));
        let bm = Matrix::from_column_slice(n, 1, &b);
        let placed = real_eigenvalues(&(a - bm * k));
        let mut want = desired.clone();
        want.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (p, w) in placed.iter().zip(&want) {
            assert!((p - w).abs() <= 1e-8, "{placed:?} vs {want:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn riccati_matrices_stay_symmetric_psd(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let p = Problem::random(&mut g);
        let sol = solve_lqr(&p.system(), &p.weights()).unwrap();
        prop_assert_eq!(sol.riccati.len(), p.horizon + 1);
        prop_assert_eq!(sol.gains.len(), p.horizon);
        for pk in &sol.riccati {
            prop_assert!(oracles::max_abs_diff(pk, &pk.transpose()) == 0.0);
            let scale = pk.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
            prop_assert!(oracles::sym_eigenvalues(pk)[0] >= -1e-9 * scale);
        }
    }

    #[test]
    fn library_simulation_agrees_with_oracle(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let p = Problem::random(&mut g);
        let sol = solve_lqr(&p.system(), &p.weights()).unwrap();
        let traj = simulate_closed_loop(&p.system(), &Schedule::Varying(sol.gains.clone()), &p.x0).unwrap();
        let cost = lqg_core::lqr::evaluate_cost(&traj, &p.weights()).unwrap();
        let oracle = p.cost(&sol.gains);
        prop_assert!((cost - oracle).abs() <= 1e-9 * oracle.abs().max(1.0));
    }
}
