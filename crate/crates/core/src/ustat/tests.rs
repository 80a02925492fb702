use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::moments::all_monomials;

fn normal_sample(p: usize, n: usize, seed: u64) -> SampleMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    SampleMatrix::new(DMatrix::from_fn(p, n, |_, _| {
        StandardNormal.sample(&mut rng)
    }))
    .unwrap()
}

/// Moments of a Gaussian with mean `mu` and covariance `s`, by expanding
/// `prod (mu_v + Y_v)` and applying Isserlis' theorem to the centered part.
struct GaussianMoments {
    mu: Vec<f64>,
    s: DMatrix<f64>,
}

impl GaussianMoments {
    fn centered(&self, idx: &[usize]) -> f64 {
        match idx.len() {
            0 => 1.0,
            2 => self.s[(idx[0], idx[1])],
            4 => {
                let s = |a: usize, b: usize| self.s[(idx[a], idx[b])];
                s(0, 1) * s(2, 3) + s(0, 2) * s(1, 3) + s(0, 3) * s(1, 2)
            }
            _ => 0.0,
        }
    }
}

impl MomentLookup for GaussianMoments {
    fn moment(&self, idx: &[usize]) -> f64 {
        let k = idx.len();
        (0..1u32 << k)
            .map(|mask| {
                let (inside, outside): (Vec<usize>, Vec<usize>) =
                    (0..k).partition(|&b| mask & (1 << b) != 0);
                let centered: Vec<usize> = inside.iter().map(|&b| idx[b]).collect();
                let mean_part: f64 = outside.iter().map(|&b| self.mu[idx[b]]).product();
                mean_part * self.centered(&centered)
            })
            .sum()
    }
}

/// Records every lookup; returns a fixed arbitrary value.
#[derive(Default)]
struct Recorder(RefCell<BTreeSet<Monomial>>);

impl MomentLookup for Recorder {
    fn moment(&self, idx: &[usize]) -> f64 {
        self.0.borrow_mut().insert(Monomial::new(idx));
        0.5 + idx.len() as f64
    }
}

/// The all-distinct closed form written with the real indices; correct for
/// any coincidence pattern because it is just `Cov(A_ij, A_kl) / 4`.
fn general_zeta1<M: MomentLookup>(m: &M, i: usize, j: usize, k: usize, l: usize) -> f64 {
    let (mi, mj, mk, ml) = (
        m.moment(&[i]),
        m.moment(&[j]),
        m.moment(&[k]),
        m.moment(&[l]),
    );
    0.25 * (m.moment(&[i, j, k, l])
        - mi * m.moment(&[j, k, l])
        - mj * m.moment(&[i, k, l])
        - mk * m.moment(&[i, j, l])
        + mi * mk * m.moment(&[j, l])
        + mj * mk * m.moment(&[i, l])
        - m.moment(&[i, j, k]) * ml
        + mi * ml * m.moment(&[j, k])
        + mj * ml * m.moment(&[i, k])
        - (m.moment(&[i, j]) - 2.0 * mi * mj) * (m.moment(&[k, l]) - 2.0 * mk * ml))
}

fn tuples(p: usize) -> impl Iterator<Item = [usize; 4]> {
    (0..p * p * p * p).map(move |x| [x / (p * p * p), (x / (p * p)) % p, (x / p) % p, x % p])
}

#[test]
fn covariance_of_two_points() {
    let s = SampleMatrix::from_observations(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
    let c = estimate_covariance(&s).unwrap();
    assert_eq!(c, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));
}

#[test]
fn covariance_of_constant_sample_is_zero() {
    let s = SampleMatrix::new(DMatrix::from_element(3, 10, 4.2)).unwrap();
    assert!(estimate_covariance(&s).unwrap().amax() < 1e-15);
}

#[test]
fn covariance_converges_to_population() {
    let mut s = normal_sample(2, 100_000, 3).into_data();
    s.row_mut(0).scale_mut(2f64.sqrt());
    let c = estimate_covariance(&SampleMatrix::new(s).unwrap()).unwrap();
    let truth = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0]));
    assert!((c - truth).amax() < 0.05);
}

#[test]
fn pair_index_is_a_bijection() {
    for p in 1..7 {
        let idx = PairIndex::new(p);
        assert_eq!(idx.len(), p * (p + 1) / 2);
        for (r, &(i, j)) in idx.pairs().iter().enumerate() {
            assert_eq!(idx.index(i, j), r);
            assert_eq!(idx.index(j, i), r);
        }
    }
}

#[test]
fn classification_examples() {
    assert_eq!(classify_case(1, 2, 3, 4).case.number(), 1);
    assert_eq!(classify_case(1, 1, 1, 1).case.number(), 7);
    let swapped = classify_case(3, 4, 1, 2);
    assert_eq!(swapped.case, Case::AllDistinct);
    assert_eq!(
        swapped.substitution(),
        vec![('a', 3), ('b', 4), ('c', 1), ('d', 2)]
    );
    let var = classify_case(2, 5, 2, 5);
    assert_eq!(var.case, Case::OffDiagonalVariance);
    assert_eq!(var.substitution(), vec![('a', 2), ('b', 5)]);
    // Cov(S_12, S_22) = Cov(S_22, S_21): case 6 with a = 2, d = 1
    let adj = classify_case(1, 2, 2, 2);
    assert_eq!(adj.case, Case::DiagonalAndAdjacent);
    assert_eq!(adj.substitution(), vec![('a', 2), ('d', 1)]);
}

#[test]
fn case_numbers_round_trip() {
    for c in Case::ALL {
        assert_eq!(Case::from_number(c.number()), Some(c));
    }
    assert_eq!(Case::from_number(0), None);
    assert_eq!(Case::from_number(8), None);
}

#[test]
fn assignment_reproduces_tuple_up_to_symmetry() {
    for t in tuples(5) {
        let asg = classify_case(t[0], t[1], t[2], t[3]);
        let pat = asg.case.pattern();
        for pos in 0..4 {
            assert_eq!(asg.indices[pos], asg.indices[pat[pos]]);
        }
        let reachable = SYMMETRIES
            .iter()
            .any(|s| [t[s[0]], t[s[1]], t[s[2]], t[s[3]]] == asg.indices);
        assert!(reachable, "{t:?} -> {asg:?}");
    }
}

#[test]
fn exhaustive_table_has_seven_classes() {
    // Independent enumeration: a class is the lexicographically smallest
    // first-occurrence relabeling over the eight symmetries.
    let syms: [[usize; 4]; 8] = [
        [0, 1, 2, 3],
        [1, 0, 2, 3],
        [0, 1, 3, 2],
        [1, 0, 3, 2],
        [2, 3, 0, 1],
        [2, 3, 1, 0],
        [3, 2, 0, 1],
        [3, 2, 1, 0],
    ];
    let relabel = |t: [usize; 4]| {
        let mut seen: Vec<usize> = Vec::new();
        t.map(|v| match seen.iter().position(|&x| x == v) {
            Some(k) => k,
            None => {
                seen.push(v);
                seen.len() - 1
            }
        })
    };
    let class = |t: [usize; 4]| {
        syms.iter()
            .map(|s| relabel([t[s[0]], t[s[1]], t[s[2]], t[s[3]]]))
            .min()
            .unwrap()
    };
    let mut table: BTreeMap<[usize; 4], BTreeSet<Case>> = BTreeMap::new();
    let mut hit = BTreeSet::new();
    for t in tuples(5) {
        let case = classify_case(t[0], t[1], t[2], t[3]).case;
        table.entry(class(t)).or_default().insert(case);
        hit.insert(case);
    }
    assert_eq!(table.len(), 7);
    assert_eq!(hit.len(), 7);
    for cases in table.values() {
        assert_eq!(cases.len(), 1, "{table:?}");
    }
}

#[test]
fn requirements_are_exactly_what_each_closed_form_reads() {
    for case in Case::ALL {
        let rec = Recorder::default();
        zeta1(
            &CaseAssignment {
                case,
                indices: case.pattern(),
            },
            &rec,
        );
        let expect: BTreeSet<Monomial> = moment_requirements(case).into_iter().collect();
        assert_eq!(*rec.0.borrow(), expect, "{case:?}");
    }
}

#[test]
fn requirement_examples() {
    let m = |s: &[usize]| Monomial::new(s);
    let seven: BTreeSet<_> = moment_requirements(Case::DiagonalVariance)
        .into_iter()
        .collect();
    assert_eq!(
        seven,
        [m(&[0]), m(&[0, 0]), m(&[0, 0, 0]), m(&[0, 0, 0, 0])].into()
    );
    let two: BTreeSet<_> = moment_requirements(Case::TwoDiagonals)
        .into_iter()
        .collect();
    let expect: BTreeSet<_> = [
        m(&[0]),
        m(&[2]),
        m(&[0, 0]),
        m(&[2, 2]),
        m(&[0, 2]),
        m(&[0, 0, 2]),
        m(&[0, 2, 2]),
        m(&[0, 0, 2, 2]),
    ]
    .into();
    assert_eq!(two, expect);
    for mono in moment_requirements(Case::OffDiagonalVariance) {
        assert!(mono.indices().iter().all(|&v| v < 2));
    }
}

#[test]
fn diagonal_variance_at_standard_normal_moments() {
    let m = MomentTable::from_values(
        [
            (Monomial::new(&[0]), 0.0),
            (Monomial::new(&[0, 0]), 1.0),
            (Monomial::new(&[0, 0, 0]), 0.0),
            (Monomial::new(&[0; 4]), 3.0),
        ],
        1,
    );
    let z = zeta1(&classify_case(0, 0, 0, 0), &m);
    assert!((z - 0.5).abs() < 1e-15);
}

#[test]
fn independent_zero_mean_variables_give_zero() {
    let g = GaussianMoments {
        mu: vec![0.0; 4],
        s: DMatrix::identity(4, 4),
    };
    assert_eq!(zeta1(&classify_case(0, 1, 2, 3), &g), 0.0);
}

#[test]
fn every_case_matches_isserlis_oracle() {
    // Non-zero means exercise all the centering terms.
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.3, -0.2, 0.1, 0.0, 1.2, 0.4, -0.3, 0.0, 0.0, 0.9, 0.2, 0.0, 0.0, 0.0, 1.1,
        ],
    );
    let s = a.transpose() * &a;
    let g = GaussianMoments {
        mu: vec![0.7, -1.3, 2.1, 0.4],
        s: s.clone(),
    };
    for t in tuples(4) {
        let [i, j, k, l] = t;
        let expect = 0.25 * (s[(i, k)] * s[(j, l)] + s[(i, l)] * s[(j, k)]);
        let got = zeta1(&classify_case(i, j, k, l), &g);
        assert!((got - expect).abs() < 1e-10, "{t:?}: {got} vs {expect}");
    }
}

#[test]
fn closed_forms_agree_with_general_formula_on_sample_moments() {
    let s = normal_sample(5, 300, 8);
    let m = compute_moments(&s, all_monomials(5, 4)).unwrap();
    for t in tuples(5) {
        let [i, j, k, l] = t;
        let got = zeta1(&classify_case(i, j, k, l), &m);
        let expect = general_zeta1(&m, i, j, k, l);
        assert!((got - expect).abs() < 1e-11 * (1.0 + expect.abs()), "{t:?}");
    }
}

#[test]
fn single_variable_uses_diagonal_variance() {
    let s = normal_sample(1, 50, 2);
    let est = cov_of_cov(&s).unwrap();
    assert_eq!(est.cov_of_cov.shape(), (1, 1));
    let m = compute_moments(&s, moment_requirements(Case::DiagonalVariance)).unwrap();
    let expect = leading_coefficient(50) * zeta1(&classify_case(0, 0, 0, 0), &m);
    assert!((est.cov_of_cov[(0, 0)] - expect).abs() < 1e-15);
}

#[test]
fn cov_of_cov_symmetries() {
    let est = cov_of_cov(&normal_sample(4, 120, 5)).unwrap();
    let c = &est.cov_of_cov;
    assert_eq!(c, &c.transpose());
    for t in tuples(4) {
        let [i, j, k, l] = t;
        let v = est.get(i, j, k, l);
        assert_eq!(v, est.get(k, l, i, j));
        assert_eq!(v, est.get(j, i, l, k));
    }
    assert!(c.diagonal().iter().all(|&d| d >= 0.0));
    assert_eq!(est.clamped, 0);
}

#[test]
fn scaling_law_in_n() {
    assert!((leading_coefficient(3) - 4.0 / 6.0).abs() < 1e-15);
    let m = GaussianMoments {
        mu: vec![0.0, 0.0],
        s: DMatrix::identity(2, 2),
    };
    let (small, _) = cov_of_cov_from_moments(&m, 2, 1_000).unwrap();
    let (large, _) = cov_of_cov_from_moments(&m, 2, 4_000).unwrap();
    let ratio = small[(0, 0)] / large[(0, 0)];
    let expect = leading_coefficient(1_000) / leading_coefficient(4_000);
    assert!((ratio - expect).abs() < 1e-12);
    for n in [100usize, 1_000, 10_000] {
        assert!((leading_coefficient(n) * n as f64 - 4.0).abs() < 8.0 / n as f64);
    }
}

#[test]
fn too_few_samples() {
    let s = normal_sample(2, 2, 1);
    assert!(matches!(cov_of_cov(&s), Err(Error::InvalidArgument(_))));
}
