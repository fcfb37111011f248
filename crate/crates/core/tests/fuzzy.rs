use crane_core::fuzzy::{
    fuzzify, infer, update_gains, Consequent, FuzzyDomains, FuzzyLabel, FuzzyRuleTable,
    FuzzyTuner, GainDeltas,
};
use crane_core::ControllerGains;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use sha2::{Digest, Sha256};

/// Rows are the error rate, columns the displacement error; each cell is
/// `kp/kd/kl`.
const TRANSCRIBED: &str = "
NB: PB/PS/NB PB/PS/NB PM/ZE/PB PM/ZE/ZE PS/ZE/PB PS/PB/NB ZE/PB/NB
NM: PB/NS/NB PB/NS/NB PM/NS/PB PM/NS/ZE PS/ZE/PB ZE/NS/NB ZE/PM/NB
NS: PM/NB/NB PM/NB/NB PM/NM/PB PS/NS/ZE ZE/ZE/PB NS/PS/NB NM/PM/NB
ZE: PM/NB/NB PS/NM/NB PS/NM/PB ZE/NS/ZE NS/ZE/PB NM/PS/NB NM/PM/NB
PS: PS/NB/NB PS/NM/NB ZE/NS/PB NS/NS/ZE NS/ZE/PB NM/PS/NB NM/PS/NB
PM: ZE/NM/NB ZE/NS/NB NS/NS/PB NM/NS/ZE NM/ZE/PB NM/PS/NB NB/PS/NB
PB: ZE/PS/NB NS/ZE/NB NS/ZE/PB NM/ZE/ZE NM/ZE/PB NB/PB/NB NB/PB/NB
";

const DEFAULT_TABLE_SHA256: &str =
    "0d2cb70af75ac1649073b39b1ba5a8f2c4e2f9990ea2af37846b34e33ad1825c";

fn transcription_as_override() -> String {
    let cols = ["NB", "NM", "NS", "ZE", "PS", "PM", "PB"];
    let mut out = String::new();
    for line in TRANSCRIBED.lines().filter(|l| !l.trim().is_empty()) {
        let (row, cells) = line.split_once(':').unwrap();
        for (col, cell) in cols.iter().zip(cells.split_whitespace()) {
            out.push_str(&format!("{row} {col} {}\n", cell.replace('/', " ")));
        }
    }
    out
}

#[test]
fn default_table_matches_transcription() {
    let canonical = FuzzyRuleTable::default().to_string();
    assert_eq!(canonical, transcription_as_override());
    let digest: String =
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(digest, DEFAULT_TABLE_SHA256);
}

#[test]
fn memberships_partition_unity() {
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    for _ in 0..1_000 {
        let v: f64 = r.gen_range(-1.5..1.5);
        let mu = fuzzify(v);
        assert!((mu.sum() - 1.0).abs() < 1e-12, "{v}: {}", mu.sum());
        assert!(mu.0.iter().all(|m| (0.0..=1.0).contains(m)));
        assert!(mu.0.iter().filter(|m| **m > 0.0).count() <= 2);
    }
    for l in FuzzyLabel::ALL {
        assert_eq!(fuzzify(l.center()).degree(l), 1.0);
    }
}

#[test]
fn outputs_stay_inside_their_domains() {
    let tuner = FuzzyTuner::new(ControllerGains::default());
    let d = tuner.domains;
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(32);
    for _ in 0..10_000 {
        let e = r.gen_range(-3.0..3.0);
        let e_dot = r.gen_range(-2.0..2.0);
        let g = tuner.deltas(e, e_dot);
        assert!(d.dkp.contains(g.kp) && d.dkd.contains(g.kd) && d.dkl.contains(g.kl), "{g:?}");
    }
}

#[test]
fn centered_inputs_fire_only_the_centre_rule() {
    let d = FuzzyDomains::default();
    let table = FuzzyRuleTable::default();
    let zero = fuzzify(0.0);
    let out = infer(&table, &d, &zero, &zero);
    // ZE/NS/ZE
    assert_eq!(out, GainDeltas { kp: 0.0, kd: -10.0 / 3.0, kl: 0.0 });

    let uniform = FuzzyRuleTable::from_cells([[Consequent {
        kp: FuzzyLabel::ZE,
        kd: FuzzyLabel::ZE,
        kl: FuzzyLabel::ZE,
    }; 7]; 7]);
    let tuner = FuzzyTuner::new(ControllerGains::default()).with_table(uniform);
    for (e, e_dot) in [(0.0, 0.0), (0.3, -0.1), (-5.0, 5.0)] {
        assert_eq!(tuner.deltas(e, e_dot), GainDeltas::default());
        let t = tuner.tune(e, e_dot);
        assert_eq!(t.gains, ControllerGains::default());
        assert!(!t.clamped.any());
    }
}

#[test]
fn output_is_lipschitz_in_the_inputs() {
    // aggregated weight sum >= 1/2, weight slopes <= 3, at most four labels,
    // offsets within 2 of the average: 4 * 3 * 2 / (1/2) = 24
    let tuner = FuzzyTuner::new(ControllerGains::default());
    let d = tuner.domains;
    let bound = 24.0;
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(33);
    let mut worst = [0.0f64; 3];
    for _ in 0..20_000 {
        let e = r.gen_range(-1.0..1.0);
        let e_dot = r.gen_range(-0.5..0.5);
        let h = 1e-6;
        let (de, dedot) = (r.gen_range(-h..h), r.gen_range(-h..h));
        let a = tuner.deltas(e, e_dot);
        let b = tuner.deltas(e + de, e_dot + dedot);
        let dn = (de / (0.5 * d.e.width())).abs().max((dedot / (0.5 * d.e_dot.width())).abs());
        if dn == 0.0 {
            continue;
        }
        for (k, (x, y)) in [(a.kp, b.kp), (a.kd, b.kd), (a.kl, b.kl)].into_iter().enumerate() {
            let slope = (x - y).abs() / (dn * d.output(k).width());
            worst[k] = worst[k].max(slope);
        }
    }
    assert!(worst.iter().all(|w| *w <= bound), "{worst:?}");
}

#[test]
fn floor_clamps_and_flags() {
    let base = ControllerGains::default();
    let (g, f) = update_gains(&base, &GainDeltas { kp: -0.2, kd: -10.0, kl: -0.05 });
    assert!((g.kp - 1.3).abs() < 1e-12 && g.kd == 240.0);
    assert!((g.kl - 1e-6).abs() < 1e-18);
    assert!(f.kl && !f.kp && !f.kd);
    assert_eq!(f.count(), 1);
}

fn label() -> impl Strategy<Value = FuzzyLabel> {
    (0usize..7).prop_map(|i| FuzzyLabel::ALL[i])
}

fn table() -> impl Strategy<Value = FuzzyRuleTable> {
    prop::collection::vec((label(), label(), label()), 49).prop_map(|v| {
        FuzzyRuleTable::from_cells(std::array::from_fn(|r| {
            std::array::from_fn(|c| {
                let (kp, kd, kl) = v[r * 7 + c];
                Consequent { kp, kd, kl }
            })
        }))
    })
}

proptest! {
    #[test]
    fn override_file_round_trips(t in table(), seed in any::<u64>()) {
        let text = t.to_string();
        prop_assert_eq!(text.parse::<FuzzyRuleTable>().unwrap(), t.clone());

        // line order, case, comments and blank lines do not matter
        let mut lines: Vec<String> = text.lines().map(str::to_lowercase).collect();
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for i in (1..lines.len()).rev() {
            lines.swap(i, r.gen_range(0..=i));
        }
        let noisy = format!("# override\n\n{}\n", lines.join("  # cell\n"));
        prop_assert_eq!(noisy.parse::<FuzzyRuleTable>().unwrap(), t.clone());
        prop_assert_eq!(t.transposed().transposed(), t);
    }

    #[test]
    fn transposed_table_swaps_inputs(t in table(), a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let d = FuzzyDomains::default();
        let (ma, mb) = (fuzzify(a), fuzzify(b));
        prop_assert_eq!(infer(&t, &d, &ma, &mb), infer(&t.transposed(), &d, &mb, &ma));
    }

    #[test]
    fn missing_cell_is_reported(t in table(), drop in 0usize..49) {
        let text: String = t
            .to_string()
            .lines()
            .enumerate()
            .filter(|(i, _)| *i != drop)
            .map(|(_, l)| format!("{l}\n"))
            .collect();
        prop_assert!(text.parse::<FuzzyRuleTable>().is_err());
    }
}
