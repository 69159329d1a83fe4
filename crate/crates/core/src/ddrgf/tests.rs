use super::*;
use crate::banded::{
    dense_inverse, make_layout, max_block_error, oracle_selected_inverse, random_spd_like,
    to_dense, DenseMatrix,
};
use crate::rgf::{rgf_tridiag, tridiag_counts};

fn problem(l: usize, bs: usize, seed: u64) -> BlockBandedMatrix {
    random_spd_like(&make_layout(l, bs, 1).unwrap(), seed, 2.0).unwrap()
}

fn dense_block(d: &DenseMatrix, bs: usize, a: usize, b: usize) -> DenseMatrix {
    d.as_ref().submatrix(a * bs, b * bs, bs, bs).to_owned()
}

fn rel(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    (a - b).norm_l2() / b.norm_l2().max(f64::MIN_POSITIVE)
}

#[test]
fn two_layers() {
    let m = problem(2, 3, 1);
    let (d, _) = ddrgf(&m, &DomainPlan::new(&[1], 1)).unwrap();
    let (r, _) = rgf_tridiag(&m).unwrap();
    assert!(max_block_error(&d, &r).unwrap().error <= 1e-12);
}

#[test]
fn ten_layers_against_oracle() {
    let m = problem(10, 4, 2);
    let plan = DomainPlan::new(&[4], 1);
    assert_eq!(plan.layer_counts(10).unwrap(), vec![10, 2]);
    let (d, _) = ddrgf(&m, &plan).unwrap();
    let want = oracle_selected_inverse(&m).unwrap();
    assert!(max_block_error(&d, &want).unwrap().error <= 1e-10);
}

#[test]
fn plans_and_threads() {
    let m = problem(40, 8, 3);
    let want = oracle_selected_inverse(&m).unwrap();
    for s2 in [vec![1], vec![4], vec![4, 1], vec![2, 1, 1]] {
        let mut reference: Option<BlockBandedMatrix> = None;
        for threads in [1, 2, 4] {
            let (d, _) = ddrgf(&m, &DomainPlan::new(&s2, threads)).unwrap();
            assert!(
                max_block_error(&d, &want).unwrap().error <= 1e-10,
                "{s2:?} {threads}"
            );
            match &reference {
                None => reference = Some(d),
                Some(r) => assert!(max_block_error(&d, r).unwrap().error <= 1e-12),
            }
        }
    }
}

#[test]
fn ragged_trailing_groups() {
    for (l, s2) in [(11, 4), (12, 4), (13, 3), (7, 2), (6, 1)] {
        let m = problem(l, 2, l as u64);
        let want = oracle_selected_inverse(&m).unwrap();
        let (d, _) = ddrgf(&m, &DomainPlan::new(&[s2], 2)).unwrap();
        assert!(
            max_block_error(&d, &want).unwrap().error <= 1e-10,
            "l={l} s2={s2}"
        );
    }
}

#[test]
fn terminal_level_counts() {
    let m = problem(10, 2, 4);
    let (_, stats) = ddrgf_with(&m, &DomainPlan::new(&[4], 1), Grouping::Right).unwrap();
    assert_eq!(stats.terminal, tridiag_counts(2));
    assert_eq!(stats.levels.len(), 1);
}

#[test]
fn schur_without_couplings_is_t11() {
    let layout = make_layout(10, 2, 1).unwrap();
    let m = random_spd_like(&layout, 5, 2.0).unwrap();
    let (perm, desc) = interleave_permutation(&layout, 1, 4).unwrap();
    // zero every block between the domains
    let mut decoupled = m.clone();
    for a in 0..10usize {
        for b in a.saturating_sub(1)..(a + 2).min(10) {
            let (i, j) = (perm.new_of(a), perm.new_of(b));
            if (i < 2) != (j < 2) {
                decoupled.set_block(a, b, DenseMatrix::zeros(2, 2)).unwrap();
            }
        }
    }
    let parts = permute_matrix(&decoupled, &perm, desc.num_d1_layers()).unwrap();
    let mut k = Kernels::sequential();
    let results: Vec<_> = (0..2)
        .map(|i| SubdomainResult::compute(&parts, i, &mut k, false).unwrap())
        .collect();
    let ts = assemble_schur(&parts, &results, &mut k).unwrap();
    assert_eq!(ts, parts.t11().unwrap());
    let s = rgf_tridiag(&ts).unwrap().0;
    let lower = correction_offdiag(OffDiagonal::Lower, &s, &results, &mut k);
    assert!(lower.iter().all(|(_, b)| b.norm_l2() == 0.0));
    let cores = correction_diag(&s, &results, Grouping::Right, &mut k);
    for (r, c) in results.iter().zip(&cores) {
        assert_eq!(&r.inverse.core, c);
    }
}

#[test]
fn schur_matches_dense_elimination() {
    let m = problem(10, 3, 6);
    let mut k = Kernels::sequential();
    let lp = ddrgf_level_parts(&m, 4, &mut k).unwrap();
    let n1 = lp.parts.n1();
    let t = lp.parts.to_dense();
    let d1 = n1 * 3;
    let n = t.nrows();
    let t11 = t.as_ref().submatrix(0, 0, d1, d1).to_owned();
    let t12 = t.as_ref().submatrix(0, d1, d1, n - d1).to_owned();
    let t21 = t.as_ref().submatrix(d1, 0, n - d1, d1).to_owned();
    let t22 = t.as_ref().submatrix(d1, d1, n - d1, n - d1).to_owned();
    let schur = &t11 - &t12 * dense_inverse(&t22).unwrap() * &t21;
    let got = to_dense(&lp.schur);
    assert!(rel(&got, &schur) <= 1e-12);
    assert_eq!(lp.schur.bandwidth(), 1);
    for (i, j) in schur_coupling_pattern(&lp.results) {
        assert!(i.abs_diff(j) <= 1);
    }
    assert!(cross_subdomain_couplings(&lp.parts).is_empty());
}

#[test]
fn corrections_against_dense_inverse() {
    let (l, bs) = (10, 3);
    let m = problem(l, bs, 7);
    let inv = dense_inverse(&to_dense(&m)).unwrap();
    let mut k = Kernels::sequential();
    let lp = ddrgf_level_parts(&m, 4, &mut k).unwrap();
    let s = rgf_tridiag(&lp.schur).unwrap().0;
    for which in [OffDiagonal::Upper, OffDiagonal::Lower] {
        let blocks = correction_offdiag(which, &s, &lp.results, &mut k);
        assert_eq!(blocks.len(), 3);
        for ((a, b), blk) in blocks {
            assert!(
                rel(&blk, &dense_block(&inv, bs, a, b)) <= 1e-11,
                "{which:?} ({a},{b})"
            );
        }
    }
    let right = correction_diag(&s, &lp.results, Grouping::Right, &mut k);
    let left = correction_diag(&s, &lp.results, Grouping::Left, &mut k);
    for ((r, rc), lc) in lp.results.iter().zip(&right).zip(&left) {
        assert!(max_block_error(lc, rc).unwrap().error <= 1e-12);
        for (a, b, blk) in rc.iter_blocks() {
            let want = dense_block(&inv, bs, r.layers.start + a, r.layers.start + b);
            assert!(rel(blk, &want) <= 1e-10);
        }
    }
}

#[test]
fn only_halo_blocks_feed_the_couplings() {
    let m = problem(14, 2, 8);
    let mut k = Kernels::sequential();
    let lp = ddrgf_level_parts(&m, 4, &mut k).unwrap();
    for r in &lp.results {
        let last = r.num_layers() - 1;
        for (a, b) in r.inverse.reads() {
            assert!(a == 0 || a == last || b == 0 || b == last, "read ({a},{b})");
        }
    }
}

#[test]
fn groupings_agree_end_to_end() {
    let m = problem(23, 4, 9);
    let plan = DomainPlan::new(&[3, 1], 1);
    let (l, sl) = ddrgf_with(&m, &plan, Grouping::Left).unwrap();
    let (r, sr) = ddrgf_with(&m, &plan, Grouping::Right).unwrap();
    assert!(max_block_error(&l, &r).unwrap().error <= 1e-12);
    assert_eq!(sl.total(), sr.total());
}

#[test]
fn singular_subdomain_is_located() {
    use faer::Mat;
    let layout = make_layout(10, 1, 1).unwrap();
    // layer 7 sits in the second D₂ sub-domain (layers 5..9); its 1×1 sub-domain
    // pivot from the bottom is 1 − 1·1·1 = 0 at layer 7.
    let m = BlockBandedMatrix::from_fn(&layout, |a, b| {
        let v = match (a, b) {
            (8, 8) => 1.0,
            (7, 7) => 1.0,
            _ if a == b => 4.0,
            _ => 1.0,
        };
        Mat::from_fn(1, 1, |_, _| C64::new(v, 0.0))
    })
    .unwrap();
    let err = ddrgf(&m, &DomainPlan::new(&[4], 1)).unwrap_err();
    assert_eq!(
        err,
        Error::DdrgfSingular {
            level: 1,
            location: "D2 sub-domain 1".into(),
            layer: 7
        }
    );
}

#[test]
fn invalid_plans() {
    let m = problem(10, 2, 1);
    assert!(matches!(
        ddrgf(&m, &DomainPlan::new(&[4, 4], 1)),
        Err(Error::InvalidPlan(_))
    ));
    let wide = random_spd_like(&make_layout(6, 1, 2).unwrap(), 1, 2.0).unwrap();
    assert!(matches!(
        ddrgf(&wide, &DomainPlan::new(&[1], 1)),
        Err(Error::Unsupported(_))
    ));
}
