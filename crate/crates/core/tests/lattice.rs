use dcqec::lattice::{logical_class_at, logical_operators, stabilizer_generator};
use dcqec::noise::{sample_depolarizing_with, stream_rng};
use dcqec::{compute_syndrome, logical_class, sample_depolarizing, BitPlane, NoiseSpec, Pauli, PauliFrame, Plane, ToricLattice};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn frame_from(lat: &ToricLattice, paulis: &[u8]) -> PauliFrame {
    let mut f = PauliFrame::identity(lat);
    for (q, &p) in paulis.iter().enumerate().take(lat.n_qubits()) {
        f.set(q, Pauli::from_index(p as usize % 4).unwrap());
    }
    f
}

/// A random product of stabilizer generators and logical operators.
fn random_closed_frame(lat: &ToricLattice, rng: &mut ChaCha8Rng) -> PauliFrame {
    let mut f = PauliFrame::identity(lat);
    for plane in [Plane::Primal, Plane::Dual] {
        for site in 0..lat.size() * lat.size() {
            if rng.random_bool(0.5) {
                f.compose_assign(&stabilizer_generator(lat, plane, site));
            }
        }
    }
    for op in logical_operators(lat) {
        if rng.random_bool(0.5) {
            f.compose_assign(&op);
        }
    }
    f
}

#[test]
fn defect_planes_have_even_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for l in [3, 5, 7, 15] {
        let lat = ToricLattice::new(l).unwrap();
        for _ in 0..10_000 {
            let p = rng.random_range(0.0..0.5);
            let f = sample_depolarizing_with(p, &lat, &mut rng);
            let s = compute_syndrome(&f, &lat).unwrap();
            assert_eq!(s.vertex.count_ones() % 2, 0);
            assert_eq!(s.plaquette.count_ones() % 2, 0);
        }
    }
}

proptest! {
    #[test]
    fn syndrome_is_a_homomorphism(l in 2usize..9, a in prop::collection::vec(0u8..4, 128), b in prop::collection::vec(0u8..4, 128)) {
        let lat = ToricLattice::new(l).unwrap();
        let (fa, fb) = (frame_from(&lat, &a), frame_from(&lat, &b));
        let lhs = compute_syndrome(&fa.compose(&fb), &lat).unwrap();
        let rhs = compute_syndrome(&fa, &lat).unwrap().xor(&compute_syndrome(&fb, &lat).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn logical_class_ignores_cut_position(l in 2usize..10, seed in any::<u64>()) {
        let lat = ToricLattice::new(l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_closed_frame(&lat, &mut rng);
        let reference = logical_class_at(&f, &lat, 0).unwrap();
        for k in 1..l {
            prop_assert_eq!(logical_class_at(&f, &lat, k).unwrap(), reference);
        }
    }
}

#[test]
fn logical_class_invariant_under_every_generator() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for l in 2..=7 {
        let lat = ToricLattice::new(l).unwrap();
        for _ in 0..4 {
            let f = random_closed_frame(&lat, &mut rng);
            let class = logical_class(&f, &lat).unwrap();
            for plane in [Plane::Primal, Plane::Dual] {
                for site in 0..l * l {
                    let g = stabilizer_generator(&lat, plane, site);
                    assert_eq!(logical_class(&f.compose(&g), &lat).unwrap(), class, "L={l} {plane:?} {site}");
                }
            }
        }
    }
}

#[test]
fn depolarizing_statistics() {
    let lat = ToricLattice::new(31).unwrap();
    let noise = NoiseSpec::new(0.15, 77).unwrap();
    let mut counts = [0u64; 4];
    let frames = 100_000u64;
    for s in 0..frames {
        let f = sample_depolarizing(&noise, &lat, s);
        counts[1] += f.x.words().iter().zip(f.z.words()).map(|(x, z)| (x & !z).count_ones() as u64).sum::<u64>();
        counts[2] += f.x.words().iter().zip(f.z.words()).map(|(x, z)| (x & z).count_ones() as u64).sum::<u64>();
        counts[3] += f.x.words().iter().zip(f.z.words()).map(|(x, z)| (!x & z).count_ones() as u64).sum::<u64>();
    }
    let n = (frames * lat.n_qubits() as u64) as f64;
    let errors = (counts[1] + counts[2] + counts[3]) as f64;
    let sigma = (0.15 * 0.85 / n).sqrt();
    assert!((errors / n - 0.15).abs() < 3.0 * sigma, "rate {}", errors / n);
    for c in &counts[1..] {
        let frac = *c as f64 / errors;
        let sigma = (1.0 / 3.0 * 2.0 / 3.0 / errors).sqrt();
        assert!((frac - 1.0 / 3.0).abs() < 3.0 * sigma, "fraction {frac}");
    }
}

#[test]
fn sampling_is_thread_independent() {
    let lat = ToricLattice::new(15).unwrap();
    let noise = NoiseSpec::new(0.1, 12).unwrap();
    let serial: Vec<PauliFrame> = (0..64).map(|s| sample_depolarizing(&noise, &lat, s)).collect();
    let threaded: Vec<PauliFrame> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..64u64)
            .rev()
            .map(|s| scope.spawn(move || (s, sample_depolarizing(&noise, &lat, s))))
            .collect();
        let mut out: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        out.sort_by_key(|(s, _)| *s);
        out.into_iter().map(|(_, f)| f).collect()
    });
    assert_eq!(serial, threaded);
}

#[test]
fn neighbouring_streams_are_uncorrelated() {
    let n = 200_000;
    let (mut a, mut b) = (stream_rng(3, 10), stream_rng(3, 11));
    let xs: Vec<f64> = (0..n).map(|_| a.random::<f64>()).collect();
    let ys: Vec<f64> = (0..n).map(|_| b.random::<f64>()).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(&xs), mean(&ys));
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n as f64;
    let corr = cov / (1.0 / 12.0);
    // Under independence corr ~ N(0, 1/n).
    assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr {corr}");
}

#[test]
fn syndrome_rejects_foreign_frame() {
    let lat = ToricLattice::new(5).unwrap();
    let f = PauliFrame::from_planes(BitPlane::zeros(18), BitPlane::zeros(18)).unwrap();
    assert!(compute_syndrome(&f, &lat).is_err());
}
