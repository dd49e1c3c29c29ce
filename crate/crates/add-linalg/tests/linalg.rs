use add_core::AddManager;
use add_linalg::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---- dense oracles ---------------------------------------------------------

fn dense_matvec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn dense_matvec_t(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let cols = a.first().map_or(0, |r| r.len());
    (0..cols).map(|j| a.iter().zip(v).map(|(row, y)| row[j] * y).sum()).collect()
}

/// In-place unnormalized fast Walsh-Hadamard transform (butterfly form);
/// independent of the ADD machinery.
fn fwht(v: &mut [f64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(h * 2) {
            for j in i..i + h {
                let x = v[j];
                let y = v[j + h];
                v[j] = x + y;
                v[j + h] = x - y;
            }
        }
        h *= 2;
    }
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Vec<Vec<f64>> {
    (0..r).map(|_| (0..c).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect()
}

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()
}

// ---- tests -----------------------------------------------------------------

#[test]
fn matvec_identity_is_identity() {
    let m = AddManager::new();
    let a = identity(&m, 3).unwrap();
    let v = vec_from_dense_on(&m, &a.col_bits.clone(), &[1.0, -2.0, 3.5, 0.0, 4.0, 5.0, -6.0, 7.0])
        .unwrap();
    let u = matvec(&m, &a, &v).unwrap();
    assert_eq!(to_dense_vec(&m, &u), to_dense_vec(&m, &v));
    let ut = matvec_t(&m, &a, &v).unwrap();
    assert_eq!(to_dense_vec(&m, &ut), to_dense_vec(&m, &v));
}

#[test]
fn matvec_walsh_one() {
    // W_1 = [[1,1],[1,-1]]; W_1 [1,0] = [1,1]
    let m = AddManager::new();
    let w = walsh(&m, 1).unwrap();
    assert_eq!(to_dense(&m, &w), vec![vec![1.0, 1.0], vec![1.0, -1.0]]);
    let v = vec_from_dense_on(&m, &w.col_bits.clone(), &[1.0, 0.0]).unwrap();
    let u = matvec(&m, &w, &v).unwrap();
    assert_eq!(to_dense_vec(&m, &u), vec![1.0, 1.0]);
}

#[test]
fn walsh_zero_is_scalar_one() {
    let m = AddManager::new();
    let w = walsh(&m, 0).unwrap();
    assert_eq!(to_dense(&m, &w), vec![vec![1.0]]);
}

#[test]
fn matvec_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &(r, c) in &[(4usize, 4usize), (8, 8), (16, 8), (8, 16), (64, 64), (5, 3), (12, 7)] {
        let m = AddManager::new();
        let data = rand_mat(&mut rng, r, c);
        let a = from_dense(&m, &data).unwrap();
        let vd = rand_vec(&mut rng, c);
        let v = vec_from_dense_on(&m, &a.col_bits.clone(), &vd).unwrap();
        let u = matvec(&m, &a, &v).unwrap();
        assert!(rel_err(&to_dense_vec(&m, &u), &dense_matvec(&data, &vd)) <= 1e-12);

        let wd = rand_vec(&mut rng, r);
        let w = vec_from_dense_on(&m, &a.row_bits.clone(), &wd).unwrap();
        let ut = matvec_t(&m, &a, &w).unwrap();
        assert!(rel_err(&to_dense_vec(&m, &ut), &dense_matvec_t(&data, &wd)) <= 1e-12);
    }
}

#[test]
fn matvec_t_extracts_rows_densely() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let m = AddManager::new();
    let data = rand_mat(&mut rng, 16, 16);
    let a = from_dense(&m, &data).unwrap();
    for i in [0usize, 3, 15] {
        let e = basis_vec(&m, &a.row_bits, a.rows, i).unwrap();
        let row = matvec_t(&m, &a, &e).unwrap();
        assert!(rel_err(&to_dense_vec(&m, &row), &data[i]) <= 1e-12);
    }
}

#[test]
fn matvec_t_walsh_symmetry() {
    let m = AddManager::new();
    let w = walsh(&m, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let vd = rand_vec(&mut rng, 16);
    let v = vec_from_dense_on(&m, &w.col_bits.clone(), &vd).unwrap();
    let vr = vec_from_dense_on(&m, &w.row_bits.clone(), &vd).unwrap();
    let a = matvec(&m, &w, &v).unwrap();
    let b = matvec_t(&m, &w, &vr).unwrap();
    assert_eq!(to_dense_vec(&m, &a), to_dense_vec(&m, &b));
}

#[test]
fn matvec_equals_fwht() {
    for n in [4usize, 8, 12] {
        let m = AddManager::new();
        let w = walsh(&m, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let vd = rand_vec(&mut rng, 1 << n);
        let v = vec_from_dense_on(&m, &w.col_bits.clone(), &vd).unwrap();
        let u = matvec(&m, &w, &v).unwrap();
        let mut expect = vd.clone();
        fwht(&mut expect);
        assert!(rel_err(&to_dense_vec(&m, &u), &expect) <= 1e-10, "n={n}");
    }
}

#[test]
fn walsh_node_count_linear() {
    let m = AddManager::new();
    let mut counts = Vec::new();
    for n in 1..=14 {
        let w = walsh(&m, n).unwrap();
        counts.push(m.node_count(w.fun));
    }
    // Successive differences settle to a constant: node count is affine in n.
    let d: Vec<isize> = counts.windows(2).map(|w| w[1] as isize - w[0] as isize).collect();
    for pair in d.windows(2).skip(1) {
        assert_eq!(pair[0], pair[1], "counts {counts:?}");
    }
}

#[test]
fn vector_ops_match_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for &n in &[8usize, 100, 1024] {
        let m = AddManager::new();
        let xs = rand_vec(&mut rng, n);
        let ys = rand_vec(&mut rng, n);
        let bits = m.add_vars(add_linalg_bits(n));
        let x = vec_from_dense_on(&m, &bits, &xs).unwrap();
        let y = vec_from_dense_on(&m, &bits, &ys).unwrap();

        let sum = vec_add(&m, &x, &y).unwrap();
        let expect: Vec<f64> = xs.iter().zip(&ys).map(|(a, b)| a + b).collect();
        assert!(rel_err(&to_dense_vec(&m, &sum), &expect) <= 1e-12);

        let s = element_sum(&m, &x).unwrap();
        assert!((s - xs.iter().sum::<f64>()).abs() <= 1e-12 * xs.len() as f64);

        let d = dot(&m, &x, &y).unwrap();
        let de: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
        assert!((d - de).abs() <= 1e-12 * de.abs().max(1.0));

        let nn = norm2(&m, &x).unwrap();
        let ne = xs.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!((nn - ne).abs() <= 1e-12 * ne.max(1.0));

        assert_eq!(min_element(&m, &x).unwrap(), xs.iter().cloned().fold(f64::INFINITY, f64::min));
        assert_eq!(
            max_element(&m, &x).unwrap(),
            xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        );
    }
}

// number of bits for n entries, duplicated tiny helper
fn add_linalg_bits(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

#[test]
fn vec_identities() {
    let m = AddManager::new();
    let v = vec_from_dense(&m, &[1.0, 2.0, 4.0, 8.0]).unwrap();
    let zero = constant_vec_like(&m, &v, 0.0);
    assert_eq!(vec_add(&m, &v, &zero).unwrap().fun, v.fun);
    assert_eq!(scalar_mul(&m, 1.0, &v).unwrap().fun, v.fun);
    // v - v collapses to the single zero terminal
    let d = vec_sub(&m, &v, &v).unwrap();
    assert_eq!(d.fun, m.zero());
    assert_eq!(m.node_count(d.fun), 1);
    assert_eq!(dot(&m, &v, &zero).unwrap(), 0.0);
    // constant-1 vector of length 8 sums to 8
    let ones = constant_vec(&m, 8, 1.0).unwrap();
    assert_eq!(element_sum(&m, &ones).unwrap(), 8.0);
    let z8 = constant_vec(&m, 8, 0.0).unwrap();
    assert_eq!(element_sum(&m, &z8).unwrap(), 0.0);
}

fn constant_vec_like(m: &AddManager, v: &VecF, value: f64) -> VecF {
    constant_vec_on_bits(m, &v.bits, v.len, value)
}

fn constant_vec_on_bits(m: &AddManager, bits: &[add_core::VarId], len: usize, value: f64) -> VecF {
    let vals = vec![value; len];
    vec_from_dense_on(m, bits, &vals).unwrap()
}

#[test]
fn norm_pythagorean() {
    let m = AddManager::new();
    let v = vec_from_dense(&m, &[3.0, 4.0]).unwrap();
    assert_eq!(norm2(&m, &v).unwrap(), 5.0);
}

#[test]
fn map_elements_and_cross_consistency() {
    let m = AddManager::new();
    let v = vec_from_dense(&m, &[1.0, 2.0, 4.0, 8.0]).unwrap();
    assert_eq!(map_elements(&m, |t| t, &v).unwrap().fun, v.fun);
    let r = vec_reciprocal(&m, &v).unwrap();
    assert_eq!(to_dense_vec(&m, &r), vec![1.0, 0.5, 0.25, 0.125]);

    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let xs = rand_vec(&mut rng, 64);
    let x = vec_from_dense(&m, &xs).unwrap();
    let sq = map_elements(&m, |t| t * t, &x).unwrap();
    let via_map = element_sum(&m, &sq).unwrap();
    let via_norm = norm2_sq(&m, &x).unwrap();
    assert!((via_map - via_norm).abs() <= 1e-12 * via_norm.abs().max(1.0));
}

#[test]
fn diag_ops() {
    let m = AddManager::new();
    let d = DiagF::new(vec_from_dense(&m, &[2.0, 4.0]).unwrap());
    let v = vec_from_dense_on(&m, &d.diag.bits.clone(), &[1.0, 1.0]).unwrap();
    let ones = DiagF::new(vec_from_dense_on(&m, &d.diag.bits.clone(), &[1.0, 1.0]).unwrap());
    assert_eq!(diag_apply(&m, &ones, &v).unwrap().fun, v.fun);

    let r = diag_reciprocal(&m, &d).unwrap();
    assert_eq!(to_dense_vec(&m, &r.diag), vec![0.5, 0.25]);
    let rr = diag_reciprocal(&m, &r).unwrap();
    let back = to_dense_vec(&m, &rr.diag);
    assert!((back[0] - 2.0).abs() <= 1e-15 && (back[1] - 4.0).abs() <= 1e-15);

    let with_zero = DiagF::new(vec_from_dense(&m, &[1.0, 0.0]).unwrap());
    assert!(matches!(diag_reciprocal(&m, &with_zero), Err(LinalgError::SingularDiagonal)));
}

#[test]
fn from_dense_round_trip_and_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let m = AddManager::new();
    let data = rand_mat(&mut rng, 8, 8);
    let a = from_dense(&m, &data).unwrap();
    assert_eq!(to_dense(&m, &a), data);

    let z = from_dense(&m, &vec![vec![0.0; 4]; 4]).unwrap();
    assert_eq!(m.node_count(z.fun), 1);

    // padding: 3x5 logical inside 4x8 padded
    let data = rand_mat(&mut rng, 3, 5);
    let a = from_dense(&m, &data).unwrap();
    assert_eq!((a.rows, a.cols, a.padded_rows(), a.padded_cols()), (3, 5, 4, 8));
    assert_eq!(to_dense(&m, &a), data);
}

#[test]
fn identity_node_count_pinned() {
    let m = AddManager::new();
    let i3 = identity(&m, 3).unwrap();
    // 3 internal nodes per level plus the two terminals.
    assert_eq!(m.node_count(i3.fun), 11);
}

#[test]
fn row_extract_cases() {
    let m = AddManager::new();
    let id = identity(&m, 3).unwrap();
    for i in [0usize, 5] {
        let e = row_extract(&m, &id, i).unwrap();
        let mut expect = vec![0.0; 8];
        expect[i] = 1.0;
        assert_eq!(to_dense_vec(&m, &e), expect);
    }

    let w2 = walsh(&m, 2).unwrap();
    let r0 = row_extract(&m, &w2, 0).unwrap();
    assert_eq!(to_dense_vec(&m, &r0), vec![1.0, 1.0, 1.0, 1.0]);

    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let data = rand_mat(&mut rng, 16, 16);
    let a = from_dense(&m, &data).unwrap();
    for i in 0..16 {
        let r = row_extract(&m, &a, i).unwrap();
        assert!(rel_err(&to_dense_vec(&m, &r), &data[i]) <= 1e-12);
    }
    assert!(row_extract(&m, &a, 16).is_err());
}

#[test]
fn transpose_and_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let m = AddManager::new();
    let data = rand_mat(&mut rng, 8, 8);
    let a = from_dense(&m, &data).unwrap();
    let t = transpose(&m, &a).unwrap();
    let td = to_dense(&m, &t);
    for r in 0..8 {
        for c in 0..8 {
            assert_eq!(td[r][c], data[c][r]);
        }
    }
    // transpose twice is the identity, by handle
    let tt = transpose(&m, &t).unwrap();
    assert_eq!(tt.fun, a.fun);

    let d = mat_diagonal(&m, &a).unwrap();
    let expect: Vec<f64> = (0..8).map(|i| data[i][i]).collect();
    assert_eq!(to_dense_vec(&m, &d), expect);
}

#[test]
fn linearity_of_matvec() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let m = AddManager::new();
    let data = rand_mat(&mut rng, 16, 16);
    let a = from_dense(&m, &data).unwrap();
    let u = vec_from_dense_on(&m, &a.col_bits.clone(), &rand_vec(&mut rng, 16)).unwrap();
    let v = vec_from_dense_on(&m, &a.col_bits.clone(), &rand_vec(&mut rng, 16)).unwrap();
    let (alpha, beta) = (1.25, -0.5);
    let lin = vec_add(
        &m,
        &scalar_mul(&m, alpha, &u).unwrap(),
        &scalar_mul(&m, beta, &v).unwrap(),
    )
    .unwrap();
    let lhs = matvec(&m, &a, &lin).unwrap();
    let rhs = vec_add(
        &m,
        &scalar_mul(&m, alpha, &matvec(&m, &a, &u).unwrap()).unwrap(),
        &scalar_mul(&m, beta, &matvec(&m, &a, &v).unwrap()).unwrap(),
    )
    .unwrap();
    assert!(rel_err(&to_dense_vec(&m, &lhs), &to_dense_vec(&m, &rhs)) <= 1e-12);
}

#[test]
fn caching_neutrality() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let m = AddManager::new();
    let data = rand_mat(&mut rng, 8, 8);
    let a = from_dense(&m, &data).unwrap();
    let vd = rand_vec(&mut rng, 8);
    let v = vec_from_dense_on(&m, &a.col_bits.clone(), &vd).unwrap();
    let with_cache = matvec(&m, &a, &v).unwrap();
    m.set_cache_enabled(false);
    m.clear_cache();
    let without = matvec(&m, &a, &v).unwrap();
    m.set_cache_enabled(true);
    assert_eq!(with_cache.fun, without.fun);
}

#[test]
fn dimension_mismatch_errors() {
    let m = AddManager::new();
    let a = identity(&m, 2).unwrap();
    let v = vec_from_dense(&m, &[1.0, 2.0]).unwrap();
    assert!(matches!(matvec(&m, &a, &v), Err(LinalgError::Dim { .. })));
    let u = vec_from_dense(&m, &[1.0, 2.0, 3.0]).unwrap();
    assert!(matches!(vec_add(&m, &v, &u), Err(LinalgError::Dim { .. })));
}

#[test]
fn dense_text_io() {
    let text = "1 2 3\n4 5 6\n";
    let mat = dense_io::read_matrix(text).unwrap();
    assert_eq!(mat, vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
    assert_eq!(dense_io::write_matrix(&mat), text);
    assert!(dense_io::read_matrix("1 x\n").is_err());
}
