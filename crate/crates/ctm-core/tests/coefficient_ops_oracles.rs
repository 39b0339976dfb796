use std::sync::Arc;

use ctm_core::coefficient_ops::{
    product_bound, theoretical_bound, Form, FormOperator, FreeScattering, Scattering, WithoutReflection,
};
use ctm_core::jost::JostSolver;
use ctm_core::potentials::{PoschlTeller, SechSquare};
use ctm_core::{Field, Grid, C64};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smooth analytic coefficients with |r|, |s| < 1.
#[derive(Clone, Copy)]
struct Synthetic {
    a: f64,
    b: f64,
}

impl Scattering for Synthetic {
    fn rs(&self, k: f64) -> (C64, C64) {
        let r = C64::from_polar(self.a / (1.0 + k * k), self.b * k);
        let s = C64::from_polar(0.9 / (1.0 + 0.1 * (k - self.b).powi(2)).sqrt(), -self.a * k);
        (r, s)
    }
}

fn kgrid() -> Grid {
    Grid::symmetric(64.0, 256).unwrap()
}

fn random_vector(grid: &Grid, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Field> {
    (0..dim)
        .map(|_| {
            let (c, w, a, b): (f64, f64, f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(0.7..2.0), rng.gen(), rng.gen());
            grid.sample(|k| C64::new(a - 0.5, b - 0.5) * (-(k - c).powi(2) / (w * w)).exp())
        })
        .collect()
}

fn centers(m: usize, c: Arc<dyn Scattering>) -> Vec<Arc<dyn Scattering>> {
    (0..m).map(|_| c.clone()).collect()
}

fn velocities(m: usize) -> Vec<f64> {
    (0..m).map(|l| 1.0 - l as f64).collect()
}

#[test]
fn reflectionless_pair_is_identity() {
    let g = kgrid();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let jost: Arc<dyn Scattering> = Arc::new(JostSolver::new(Arc::new(SechSquare { amplitude: -1.5, rate: 1.0 })));
    let op = FormOperator::new(Form::One, &g, &centers(2, Arc::new(WithoutReflection(jost))), &velocities(2)).unwrap();
    let x = random_vector(&g, 2, &mut rng);
    assert_eq!(op.apply_t(&x).unwrap(), x);
    let sol = op.neumann_solve(&x, 1e-12, 200, 1.0).unwrap();
    assert_eq!(sol.iterations, 1);
    assert_eq!(sol.g, x);
}

#[test]
fn first_form_matches_hand_transcription() {
    let g = kgrid();
    let vs = [1.0, 0.0, -1.0];
    let c = [Synthetic { a: 0.7, b: 0.3 }, Synthetic { a: 0.4, b: -0.2 }, Synthetic { a: 0.5, b: 0.9 }];
    let cs: Vec<Arc<dyn Scattering>> = c.iter().map(|s| Arc::new(*s) as Arc<dyn Scattering>).collect();
    let op = FormOperator::new(Form::One, &g, &cs, &vs).unwrap();
    let fs: Vec<Box<dyn Fn(f64) -> C64>> = (0..4)
        .map(|j| {
            let c = j as f64 - 1.5;
            Box::new(move |k: f64| C64::from_polar((-(k - c).powi(2) / 2.0).exp(), 0.3 * j as f64 * k)) as Box<dyn Fn(f64) -> C64>
        })
        .collect();
    let x: Vec<Field> = fs.iter().map(|f| g.sample(f)).collect();
    let t = op.apply_t(&x).unwrap();
    for i in [96usize, 128, 150] {
        let k = g.x(i);
        // T₁ = g₁ - r₂(-k - v₂/2) g₂(-k - v₂) - s₂(-k - v₂/2) g₃(k)
        let (r2, s2) = c[1].rs(-k - vs[1] / 2.0);
        let t1 = fs[0](k) - r2 * fs[1](-k - vs[1]) - s2 * fs[2](k);
        // T₄ = g₄ - r₂(k + v₂/2) g₃(-k - v₂) - s₂(k + v₂/2) g₂(k)
        let (r2, s2) = c[1].rs(k + vs[1] / 2.0);
        let t4 = fs[3](k) - r2 * fs[2](-k - vs[1]) - s2 * fs[1](k);
        // T₃ = g₃ - r₃(-k - v₃/2) g₄(-k - v₃)
        let (r3, _) = c[2].rs(-k - vs[2] / 2.0);
        let t3 = fs[2](k) - r3 * fs[3](-k - vs[2]);
        // T₂ = g₂ - r₁(k + v₁/2) g₁(-k - v₁)
        let (r1, _) = c[0].rs(k + vs[0] / 2.0);
        let t2 = fs[1](k) - r1 * fs[0](-k - vs[0]);
        for (got, want) in [(t[0][i], t1), (t[1][i], t2), (t[2][i], t3), (t[3][i], t4)] {
            assert!((got - want).norm() < 1e-12, "{got} vs {want}");
        }
    }
}

fn coupling_graph(form: Form, m: usize) -> Vec<Vec<usize>> {
    let g = kgrid();
    let op = FormOperator::new(form, &g, &centers(m, Arc::new(Synthetic { a: 0.6, b: 0.2 })), &velocities(m)).unwrap();
    let dim = 2 * m - 2;
    let mut graph = vec![Vec::new(); dim];
    for src in 0..dim {
        let mut x = vec![vec![C64::new(0.0, 0.0); g.n]; dim];
        for i in 100..140 {
            x[src][i] = C64::new(1.0, 0.0);
        }
        let r = op.apply_r(&x).unwrap();
        for (tgt, comp) in r.iter().enumerate() {
            if comp.iter().any(|z| z.norm() > 0.0) {
                graph[tgt].push(src + 1);
            }
        }
    }
    graph
}

#[test]
fn impulse_responses_follow_coupling_graph() {
    assert_eq!(coupling_graph(Form::One, 4), vec![vec![2, 3], vec![1], vec![4, 5], vec![2, 3], vec![6], vec![4, 5]]);
    assert_eq!(coupling_graph(Form::Two, 4), vec![vec![2], vec![1, 4], vec![1, 4], vec![3, 6], vec![3, 6], vec![5]]);
    assert_eq!(coupling_graph(Form::One, 2), vec![vec![2], vec![1]]);
}

#[test]
fn reflectionless_remainder_is_nilpotent() {
    let g = kgrid();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pt: Arc<dyn Scattering> = Arc::new(WithoutReflection(Arc::new(JostSolver::new(Arc::new(SechSquare { amplitude: -1.5, rate: 1.0 })))));
    for m in 2..=4 {
        for form in [Form::One, Form::Two] {
            let mut cs = centers(m, pt.clone());
            cs[0] = Arc::new(WithoutReflection(Arc::new(Synthetic { a: 0.3, b: rng.gen() })));
            let op = FormOperator::new(form, &g, &cs, &velocities(m)).unwrap();
            for _ in 0..20 {
                let x = random_vector(&g, 2 * m - 2, &mut rng);
                let ratio = op.power_norm(&x, m - 1).unwrap() / op.norm(&x);
                assert!(ratio <= 1e-12, "m = {m}, {form:?}: {ratio:e}");
            }
        }
    }
}

#[test]
fn bound_examples() {
    for (m, c, gap) in [(2, 1.0, 1.0), (3, 2.5, 0.5), (4, 1.2, 2.0)] {
        let cm = 2f64.powi(m as i32 - 1) * c / f64::min(gap, 1.0);
        assert!((theoretical_bound(m, 1, c, gap) - m as f64 * cm).abs() < 1e-12);
    }
    assert!((theoretical_bound(2, 6, 1.0, 1.0) - 768.0 / 720.0).abs() < 1e-12);
    let j0 = (1..40).find(|&j| (j..60).all(|i| theoretical_bound(3, i + 2, 2.0, 0.5) < theoretical_bound(3, i, 2.0, 0.5))).unwrap();
    assert!(j0 < 40);
    assert!(theoretical_bound(3, 80, 2.0, 0.5) < 1e-10);
}

fn dense_matrix(op: &FormOperator) -> DMatrix<C64> {
    let n = op.kgrid.n;
    let dim = op.dim();
    let mut a = DMatrix::zeros(n * dim, n * dim);
    for col in 0..n * dim {
        let mut x = vec![vec![C64::new(0.0, 0.0); n]; dim];
        x[col / n][col % n] = C64::new(1.0, 0.0);
        let t = op.apply_t(&x).unwrap();
        for (row, z) in t.iter().flatten().enumerate() {
            a[(row, col)] = *z;
        }
    }
    a
}

#[test]
fn neumann_matches_dense_solve() {
    let g = Grid::symmetric(48.0, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let well: Arc<dyn Scattering> = Arc::new(JostSolver::new(Arc::new(SechSquare { amplitude: -1.5, rate: 1.0 })));
    let pt: Arc<dyn Scattering> = Arc::new(JostSolver::new(Arc::new(PoschlTeller { depth: 1 })));
    let op = FormOperator::new(Form::One, &g, &[well, pt], &[0.5, -0.5]).unwrap().with_zero_extension();
    let rhs = random_vector(&g, 2, &mut rng);
    let sol = op.neumann_solve(&rhs, 1e-13, 200, 1.0).unwrap();
    assert!(sol.residual < 1e-12, "{}", sol.residual);
    let b = DVector::from_iterator(2 * g.n, rhs.iter().flatten().copied());
    let x = dense_matrix(&op).lu().solve(&b).unwrap();
    let got = DVector::from_iterator(2 * g.n, sol.g.iter().flatten().copied());
    let err = (&got - &x).norm() / x.norm();
    assert!(err < 1e-8, "{err:e}");
}

#[test]
fn three_center_solve_and_probes_respect_bound() {
    let g = kgrid();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let potentials = [SechSquare { amplitude: -1.5, rate: 1.0 }, SechSquare { amplitude: 0.8, rate: 0.7 }, SechSquare { amplitude: -0.6, rate: 1.2 }];
    let mut c_meas: f64 = 0.0;
    let mut cs: Vec<Arc<dyn Scattering>> = Vec::new();
    for p in potentials {
        let solver = JostSolver::new(Arc::new(p));
        let data = solver.scattering_data(&g.xs()).unwrap();
        let cert = data.decay_certificate();
        c_meas = c_meas.max(cert.c0).max(cert.c1);
        cs.push(Arc::new(solver));
    }
    let vs = [1.0, 0.0, -1.0];
    let op = FormOperator::new(Form::One, &g, &cs, &vs).unwrap();
    let rhs = random_vector(&g, 4, &mut rng);
    let sol = op.neumann_solve(&rhs, 1e-10, 200, c_meas).unwrap();
    assert!(sol.residual <= 1e-9, "{}", sol.residual);
    for j in 1..=6 {
        let bound = theoretical_bound(3, j, c_meas.max(1.0), op.gap());
        for _ in 0..20 {
            let x = random_vector(&g, 4, &mut rng);
            let ratio = op.power_norm(&x, 2 * j).unwrap() / op.norm(&x);
            assert!(ratio <= bound, "j = {j}: {ratio} > {bound}");
        }
    }
    let free = FormOperator::new(Form::Two, &g, &centers(3, Arc::new(FreeScattering)), &vs).unwrap();
    assert!(free.neumann_solve(&rhs, 1e-12, 10, 1.0).unwrap().residual < 1e-14);
}

#[test]
fn product_bound_examples() {
    let (sup, bound) = product_bound(&[1.0, -1.0]);
    assert!((sup - 1.0 / 3.0).abs() < 1e-12 && (bound - 1.0).abs() < 1e-12, "{sup} {bound}");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let m = rng.gen_range(2..=8);
        let mut q = vec![rng.gen_range(-5.0..5.0)];
        for _ in 1..m {
            let last = *q.last().unwrap();
            q.push(last - rng.gen_range(0.1..6.0));
        }
        let (sup, bound) = product_bound(&q);
        assert!(sup <= bound, "{q:?}: {sup} > {bound}");
    }
    for m in 2..=8usize {
        let gaps = [200.0, 400.0, 800.0, 1600.0];
        let pts: Vec<(f64, f64)> = gaps
            .iter()
            .map(|&d| {
                let q: Vec<f64> = (0..m).map(|j| -(j as f64) * d).collect();
                (d.ln(), product_bound(&q).0.ln())
            })
            .collect();
        let slope = (pts[3].1 - pts[0].1) / (pts[3].0 - pts[0].0);
        let target = 1.0 - m as f64;
        assert!((slope - target).abs() <= 0.1 * target.abs(), "M = {m}: slope {slope}");
    }
}
