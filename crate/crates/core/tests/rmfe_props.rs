use cdmm_core::{build_rmfe, concatenate, make_ring, GaloisRing, Matrix, RingElement, RmfeScheme};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scheme(i: usize) -> RmfeScheme {
    let z4 = make_ring(2, 2, 1).unwrap();
    let z64 = make_ring(2, 64, 1).unwrap();
    match i {
        0 => build_rmfe(&z4, 2, 3, false).unwrap(),
        1 => build_rmfe(&z64, 2, 4, false).unwrap(),
        2 => build_rmfe(&z4, 3, 5, true).unwrap(),
        3 => build_rmfe(&make_ring(3, 2, 2).unwrap(), 4, 8, false).unwrap(),
        4 => build_rmfe(&z64, 1, 1, false).unwrap(),
        _ => {
            let inner = build_rmfe(&z4, 2, 3, false).unwrap();
            let outer = build_rmfe(inner.ext(), 2, 3, false).unwrap();
            concatenate(&outer, &inner).unwrap()
        }
    }
}

/// Embeds a base element through every tower level up to `ext`.
fn lift(ext: &GaloisRing, base: &GaloisRing, c: &RingElement) -> RingElement {
    let below = ext.base().expect("ext is above base");
    let c = if below == base { c.clone() } else { lift(below, base, c) };
    ext.embed(&c).unwrap()
}

fn vector(ring: &GaloisRing, n: usize, rng: &mut ChaCha8Rng) -> Vec<RingElement> {
    (0..n).map(|_| ring.random_element(rng)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 120, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn multiplicative_identity(i in 0usize..6, seed: u64) {
        let r = scheme(i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = vector(r.base(), r.n(), &mut rng);
        let y = vector(r.base(), r.n(), &mut rng);
        let prod = r.ext().mul(&r.phi(&x).unwrap(), &r.phi(&y).unwrap());
        prop_assert_eq!(r.psi(&prod).unwrap(), r.star(&x, &y));
        let total = r.star(&x, &y).iter().fold(r.base().zero(), |acc, z| r.base().add(&acc, z));
        prop_assert_eq!(r.psi_sum(&prod).unwrap(), total);
    }

    #[test]
    fn maps_are_linear(i in 0usize..6, seed: u64) {
        let r = scheme(i);
        let (base, ext) = (r.base(), r.ext());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = vector(base, r.n(), &mut rng);
        let y = vector(base, r.n(), &mut rng);
        let c = base.random_element(&mut rng);
        let lhs: Vec<RingElement> = x.iter().zip(&y).map(|(a, b)| base.add(&base.mul(&c, a), b)).collect();
        let rhs = ext.add(&ext.mul(&lift(ext, base, &c), &r.phi(&x).unwrap()), &r.phi(&y).unwrap());
        prop_assert_eq!(r.phi(&lhs).unwrap(), rhs);

        let u = ext.random_element(&mut rng);
        let v = ext.random_element(&mut rng);
        let mixed = ext.add(&ext.mul(&lift(ext, base, &c), &u), &v);
        let expect: Vec<RingElement> = r.psi(&u).unwrap().iter().zip(r.psi(&v).unwrap())
            .map(|(a, b)| base.add(&base.mul(&c, a), &b)).collect();
        prop_assert_eq!(r.psi(&mixed).unwrap(), expect);
    }

    #[test]
    fn matrix_pack_roundtrip(i in 0usize..6, rows in 1usize..4, cols in 1usize..4, seed: u64) {
        let r = scheme(i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<Matrix> = (0..r.n()).map(|_| Matrix::random(r.base(), rows, cols, &mut rng)).collect();
        let b: Vec<Matrix> = (0..r.n()).map(|_| Matrix::random(r.base(), cols, 2, &mut rng)).collect();
        let prod = r.phi_matrix(&a).unwrap().matmul(&r.phi_matrix(&b).unwrap()).unwrap();
        let expect: Vec<Matrix> = a.iter().zip(&b).map(|(x, y)| x.matmul(y).unwrap()).collect();
        prop_assert_eq!(r.psi_matrix(&prod).unwrap(), expect);
    }
}
