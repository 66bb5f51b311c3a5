use approx::assert_relative_eq;
use faer::Mat;
use ls2d::cli::{export_field, read_field, FieldPoints, RunConfig};
use ls2d::dense::{kernel_matrix, kernel_matvec, rel_diff};
use ls2d::discretization::*;
use ls2d::fast_apply::ConvolutionOperator;
use ls2d::hbs::{compress, hbs_matvec, CompressOptions, HbsTree};
use ls2d::lowrank::id_rows;
use ls2d::solver::{apply_inverse, build_inverse};
use ls2d::special::{bessel_j0, bessel_j1, bessel_y0, bessel_y1, hankel_h0};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wronskian_holds(x in 1e-3f64..200.0) {
        let w = bessel_j1(x) * bessel_y0(x).unwrap() - bessel_j0(x) * bessel_y1(x).unwrap();
        prop_assert!((w * std::f64::consts::PI * x / 2.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hankel_is_j0_plus_i_y0(x in 1e-3f64..200.0) {
        let h = hankel_h0(x).unwrap();
        prop_assert_eq!(h.re, bessel_j0(x));
        prop_assert_eq!(h.im, bessel_y0(x).unwrap());
    }

    #[test]
    fn kernel_is_complex_symmetric(n in 2usize..10, kappa in 1.0f64..60.0) {
        let grid = UniformGrid::unit_square(n);
        let g = kernel_matrix(&grid, kappa, None).unwrap();
        prop_assert_eq!((&g - g.transpose()).norm_max(), 0.0);
    }

    #[test]
    fn fft_apply_matches_summation(n1 in 1usize..12, n2 in 1usize..12, kappa in 1.0f64..40.0, seed in 0u64..1000) {
        let grid = UniformGrid::new([0.0, 0.0], 0.05, n1, n2).unwrap();
        let q: Vec<Complex64> = (0..grid.len())
            .map(|i| Complex64::new(((i as u64 * 7 + seed) % 13) as f64 - 6.0, ((i as u64 + seed) % 5) as f64))
            .collect();
        let op = ConvolutionOperator::new(&grid, kappa, None);
        let fast = op.apply_g(&q).unwrap();
        let exact = kernel_matvec(&grid, kappa, None, &q).unwrap();
        prop_assert!(rel_diff(&fast, &exact) < 1e-12);
    }

    #[test]
    fn id_reproduces_skeleton_rows(rank in 1usize..6, m in 8usize..30, n in 8usize..30, seed in 0u64..1000) {
        let f = |i: usize, j: usize, s: u64| Complex64::new(((i * 31 + j * 17) as f64 + s as f64).sin(), ((i * 13 + j * 7) as f64 * 0.3).cos());
        let u = Mat::from_fn(m, rank, |i, j| f(i, j, seed));
        let v = Mat::from_fn(rank, n, |i, j| f(j, i, seed + 1));
        let a = &u * &v;
        let id = id_rows(a.as_ref(), 1e-10 * a.norm_max());
        prop_assert!(id.rank() <= rank);
        for (p, &r) in id.skeleton.iter().enumerate() {
            for c in 0..id.rank() {
                let want = if c == p { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                prop_assert_eq!(id.interp[(r, c)], want);
            }
        }
        let skel = Mat::from_fn(id.rank(), n, |p, j| a[(id.skeleton[p], j)]);
        prop_assert!((&id.interp * &skel - &a).norm_max() <= 1e-8 * a.norm_max());
    }

    #[test]
    fn field_files_round_trip(n1 in 1usize..6, n2 in 1usize..6, values in complex_vec(36)) {
        let dir = tempfile::tempdir().unwrap();
        let grid = UniformGrid::new([-0.5, -0.5], 0.1, n1, n2).unwrap();
        let v = &values[..grid.len()];
        let (csv, bin) = export_field(&dir.path().join("u"), FieldPoints::Grid(&grid), v).unwrap();
        let back = read_field(&bin).unwrap();
        prop_assert_eq!((back.n1 as usize, back.n2 as usize, back.h), (n1, n2, 0.1));
        prop_assert_eq!(back.values.as_slice(), v);
        let text = std::fs::read_to_string(csv).unwrap();
        for (line, z) in text.lines().skip(1).zip(v) {
            let cols: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            prop_assert_eq!((cols[2], cols[3]), (z.re, z.im));
        }
    }

    #[test]
    fn unknown_config_keys_are_rejected(key in "[a-z]{3,10}") {
        let known = ["mode", "problem", "eps", "eps_pre", "proxy_width", "leaf_size", "gmres", "probes",
            "refinements", "sweep", "n_eigs", "output", "threads", "seed"];
        prop_assume!(!known.contains(&key.as_str()));
        let text = format!(r#"{{"problem": {{"potential": {{"kind": "zero"}}, "kappa": 1, "grid": {{"n": 4}}}}, "{key}": 1}}"#);
        let err = RunConfig::from_json(&text).unwrap_err().to_string();
        prop_assert!(err.contains(&key));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn hbs_matvec_tracks_tolerance(exp in 3i32..10, kappa in 5.0f64..30.0) {
        let eps = 10f64.powi(-exp);
        let grid = UniformGrid::unit_square(32);
        let tree = HbsTree::new(&grid, 64).unwrap();
        let fac = compress(&tree, kappa, None, CompressOptions::new(eps)).unwrap();
        let q: Vec<Complex64> = (0..grid.len()).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let exact = kernel_matvec(&grid, kappa, None, &q).unwrap();
        prop_assert!(rel_diff(&hbs_matvec(&fac, &tree, &q).unwrap(), &exact) <= 10.0 * eps);
    }

    #[test]
    fn zero_potential_inverse_is_identity(kappa in 1.0f64..40.0, leaf in 16usize..200) {
        let grid = UniformGrid::unit_square(24);
        let tree = HbsTree::new(&grid, leaf).unwrap();
        let fac = compress(&tree, kappa, None, CompressOptions::new(1e-6)).unwrap();
        let inv = build_inverse(&fac, &tree, &vec![0.0; grid.len()]).unwrap();
        let f: Vec<Complex64> = (0..grid.len()).map(|i| Complex64::new(i as f64, -(i as f64))).collect();
        let q = apply_inverse(&inv, &fac, &tree, &f).unwrap();
        for (a, b) in q.iter().zip(&f) {
            assert_relative_eq!(a.re, b.re);
            assert_relative_eq!(a.im, b.im);
        }
    }
}
