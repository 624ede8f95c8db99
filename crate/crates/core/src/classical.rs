//! Classical (non-Bayesian) trip statistics: pairwise 1st/2nd-shot tables,
//! trip-length breakdowns, and repeat-trip comparisons.
//!
//! Proportion differences carry the independent two-proportion standard
//! error by default, `sqrt(p1 q1 / n + p2 q2 / n)`; the paired discordant-cell
//! form is available behind [`SeFormula::McNemar`]. Cross-row comparisons in
//! the repeat-trip table always use the independent formula.

use std::collections::HashMap;

use thiserror::Error;

use crate::ingest::{Trip, TripTable};

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("trip count must be positive")]
    ZeroTrips,
    #[error("zero standard error with non-zero difference (h1={h1}, h2={h2}, n={n})")]
    DegenerateCounts { h1: usize, h2: usize, n: usize },
}

/// Standard-error formula for a within-row Pct2 - Pct1 comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeFormula {
    /// Independent two-proportion form, `sqrt((p1 q1 + p2 q2) / n)`.
    #[default]
    Independent,
    /// Paired form from the discordant cells, `sqrt(b + c - (b-c)^2/n) / n`.
    McNemar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    PerPlayer,
    Pooled,
}

/// One row of a pairwise 1st/2nd-shot table.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStatsRow {
    pub label: String,
    pub n: usize,
    pub h1: usize,
    pub h2: usize,
    /// Proportions in `[0, 1]`; exactly `h_k / n`.
    pub pct1: f64,
    pub pct2: f64,
    pub diff: f64,
    /// Absent when the difference is non-zero but the variance estimate
    /// collapses to zero (degenerate counts).
    pub std_err: Option<f64>,
    pub z: Option<f64>,
}

/// Difference, standard error, and standard score of `h2/n - h1/n` under the
/// independent two-proportion formula.
pub fn diff_se_z(h1: usize, h2: usize, n: usize) -> Result<(f64, f64, f64), ClassicalError> {
    if n == 0 {
        return Err(ClassicalError::ZeroTrips);
    }
    let p1 = h1 as f64 / n as f64;
    let p2 = h2 as f64 / n as f64;
    let diff = p2 - p1;
    let se = ((p1 * (1.0 - p1) + p2 * (1.0 - p2)) / n as f64).sqrt();
    if se == 0.0 {
        if diff == 0.0 {
            return Ok((diff, 0.0, 0.0));
        }
        return Err(ClassicalError::DegenerateCounts { h1, h2, n });
    }
    Ok((diff, se, diff / se))
}

/// Same contract with the paired (discordant-cell) standard error; `b` is the
/// miss-then-hit count and `c` the hit-then-miss count.
fn diff_se_z_mcnemar(
    h1: usize,
    h2: usize,
    n: usize,
    b: usize,
    c: usize,
) -> Result<(f64, f64, f64), ClassicalError> {
    if n == 0 {
        return Err(ClassicalError::ZeroTrips);
    }
    let nf = n as f64;
    let diff = (h2 as f64 - h1 as f64) / nf;
    let bc = b as f64 + c as f64;
    let d = b as f64 - c as f64;
    let se = (bc - d * d / nf).max(0.0).sqrt() / nf;
    if se == 0.0 {
        if diff == 0.0 {
            return Ok((diff, 0.0, 0.0));
        }
        return Err(ClassicalError::DegenerateCounts { h1, h2, n });
    }
    Ok((diff, se, diff / se))
}

#[derive(Default, Clone, Copy)]
struct PairCells {
    n: usize,
    mm: usize,
    mh: usize,
    hm: usize,
    hh: usize,
}

impl PairCells {
    fn add(&mut self, y1: bool, y2: bool) {
        self.n += 1;
        match (y1, y2) {
            (false, false) => self.mm += 1,
            (false, true) => self.mh += 1,
            (true, false) => self.hm += 1,
            (true, true) => self.hh += 1,
        }
    }

    fn add_trip(&mut self, trip: &Trip) {
        self.add(trip.outcomes[0], trip.outcomes[1]);
    }

    fn h1(&self) -> usize {
        self.hm + self.hh
    }

    fn h2(&self) -> usize {
        self.mh + self.hh
    }

    fn row(&self, label: &str, formula: SeFormula) -> PairStatsRow {
        let (h1, h2, n) = (self.h1(), self.h2(), self.n);
        let stats = match formula {
            SeFormula::Independent => diff_se_z(h1, h2, n),
            SeFormula::McNemar => diff_se_z_mcnemar(h1, h2, n, self.mh, self.hm),
        };
        let (diff, std_err, z) = match stats {
            Ok((d, s, z)) => (d, Some(s), Some(z)),
            Err(_) => (h2 as f64 / n as f64 - h1 as f64 / n as f64, None, None),
        };
        PairStatsRow {
            label: label.to_string(),
            n,
            h1,
            h2,
            pct1: h1 as f64 / n as f64,
            pct2: h2 as f64 / n as f64,
            diff,
            std_err,
            z,
        }
    }
}

/// Pairwise 1st/2nd-shot statistics over trips with at least two shots.
/// Players with no qualifying trip are omitted.
pub fn pair_stats(table: &TripTable, grouping: Grouping, formula: SeFormula) -> Vec<PairStatsRow> {
    match grouping {
        Grouping::Pooled => {
            let mut cells = PairCells::default();
            for trip in table.iter_trips().filter(|t| t.n_shots() >= 2) {
                cells.add_trip(trip);
            }
            if cells.n == 0 {
                return Vec::new();
            }
            vec![cells.row("Total", formula)]
        }
        Grouping::PerPlayer => {
            let mut rows = Vec::new();
            for player in table.players() {
                let mut cells = PairCells::default();
                for trip in player.trips.iter().filter(|t| t.n_shots() >= 2) {
                    cells.add_trip(trip);
                }
                if cells.n > 0 {
                    rows.push(cells.row(&player.player_id, formula));
                }
            }
            rows
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripLengthClass {
    ExactlyOne,
    ExactlyTwo,
    ThreePlus,
    Total,
}

impl TripLengthClass {
    pub fn label(&self) -> &'static str {
        match self {
            Self::ExactlyOne => "Exactly 1",
            Self::ExactlyTwo => "Exactly 2",
            Self::ThreePlus => "3+",
            Self::Total => "Total",
        }
    }
}

/// One row of the trip-length breakdown. `h[k]`, `attempts[k]`, and `pct[k]`
/// describe shot index `k + 1`; entries are absent beyond the class length or
/// when the class is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TripLengthRow {
    pub class: TripLengthClass,
    pub n: usize,
    pub h: [Option<usize>; 3],
    pub attempts: [Option<usize>; 3],
    pub pct: [Option<f64>; 3],
    pub delta12: Option<f64>,
    pub delta23: Option<f64>,
    pub z12: Option<f64>,
    pub z23: Option<f64>,
}

/// Partition trips by length (1, 2, 3+) and tabulate per-shot success. The
/// Total row pools every trip per shot index over trips long enough to have
/// that shot.
pub fn trip_length_table(table: &TripTable) -> Vec<TripLengthRow> {
    let mut hits = [[0usize; 3]; 3]; // [class][shot index]
    let mut counts = [0usize; 3];
    for trip in table.iter_trips() {
        let class = match trip.n_shots() {
            1 => 0,
            2 => 1,
            _ => 2,
        };
        counts[class] += 1;
        for (k, &made) in trip.outcomes.iter().take(3).enumerate() {
            hits[class][k] += usize::from(made);
        }
    }

    let class_row = |class: TripLengthClass, idx: usize, len: usize| -> TripLengthRow {
        let n = counts[idx];
        let mut row = TripLengthRow {
            class,
            n,
            h: [None; 3],
            attempts: [None; 3],
            pct: [None; 3],
            delta12: None,
            delta23: None,
            z12: None,
            z23: None,
        };
        if n == 0 {
            return row;
        }
        for (k, &h) in hits[idx].iter().enumerate().take(len) {
            row.h[k] = Some(h);
            row.attempts[k] = Some(n);
            row.pct[k] = Some(h as f64 / n as f64);
        }
        if len >= 2 {
            if let Ok((d, _, z)) = diff_se_z(hits[idx][0], hits[idx][1], n) {
                row.delta12 = Some(d);
                row.z12 = Some(z);
            }
        }
        if len >= 3 {
            if let Ok((d, _, z)) = diff_se_z(hits[idx][1], hits[idx][2], n) {
                row.delta23 = Some(d);
                row.z23 = Some(z);
            }
        }
        row
    };

    let mut rows = vec![
        class_row(TripLengthClass::ExactlyOne, 0, 1),
        class_row(TripLengthClass::ExactlyTwo, 1, 2),
        class_row(TripLengthClass::ThreePlus, 2, 3),
    ];

    // Total row: shot k pooled over every trip with at least k+1 shots.
    let mut total = TripLengthRow {
        class: TripLengthClass::Total,
        n: counts.iter().sum(),
        h: [None; 3],
        attempts: [None; 3],
        pct: [None; 3],
        delta12: None,
        delta23: None,
        z12: None,
        z23: None,
    };
    let attempts = [
        counts[0] + counts[1] + counts[2],
        counts[1] + counts[2],
        counts[2],
    ];
    for k in 0..3 {
        if attempts[k] > 0 {
            // Classes shorter than shot k never accumulated hits there.
            let h: usize = (0..3).map(|c| hits[c][k]).sum();
            total.h[k] = Some(h);
            total.attempts[k] = Some(attempts[k]);
            total.pct[k] = Some(h as f64 / attempts[k] as f64);
        }
    }
    rows.push(total);
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepeatSituation {
    /// First trip of 2+ shots in a (player, game) with two such trips.
    First,
    /// Second such trip.
    Second,
}

impl RepeatSituation {
    pub fn label(&self) -> &'static str {
        match self {
            Self::First => "S1",
            Self::Second => "S2",
        }
    }
}

/// Cross-situation comparison of Pct_k between the second and first
/// qualifying trips, one entry per shot index k in {1, 2}.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatCross {
    pub delta: [f64; 2],
    pub std_err: [f64; 2],
    pub z: [f64; 2],
}

/// The repeat-trip comparison: paired first and second trips of 2+ shots.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatTripTable {
    /// Number of qualifying (player, game) pairs; both rows share it.
    pub n: usize,
    pub s1: Option<PairStatsRow>,
    pub s2: Option<PairStatsRow>,
    pub cross: Option<RepeatCross>,
}

/// For each (player, game) containing at least two trips of 2+ shots, the
/// first such trip feeds the S1 row and the second the S2 row; later trips
/// are ignored. Rows are absent when nothing qualifies.
pub fn repeat_trip_table(table: &TripTable, formula: SeFormula) -> RepeatTripTable {
    let mut s1 = PairCells::default();
    let mut s2 = PairCells::default();
    for player in table.players() {
        let mut per_game: HashMap<&str, Vec<&Trip>> = HashMap::new();
        for trip in player.trips.iter().filter(|t| t.n_shots() >= 2) {
            per_game
                .entry(trip.game_id.as_str())
                .or_default()
                .push(trip);
        }
        for trips in per_game.values_mut() {
            if trips.len() < 2 {
                continue;
            }
            trips.sort_by_key(|t| t.intra_game_index);
            s1.add_trip(trips[0]);
            s2.add_trip(trips[1]);
        }
    }

    if s1.n == 0 {
        return RepeatTripTable {
            n: 0,
            s1: None,
            s2: None,
            cross: None,
        };
    }

    let row1 = s1.row(RepeatSituation::First.label(), formula);
    let row2 = s2.row(RepeatSituation::Second.label(), formula);
    let n = s1.n as f64;
    let cross_stat = |a: f64, b: f64| -> (f64, f64, f64) {
        let delta = b - a;
        let se = ((a * (1.0 - a) + b * (1.0 - b)) / n).sqrt();
        let z = if se > 0.0 { delta / se } else { 0.0 };
        (delta, se, z)
    };
    let (d1, se1, z1) = cross_stat(row1.pct1, row2.pct1);
    let (d2, se2, z2) = cross_stat(row1.pct2, row2.pct2);

    RepeatTripTable {
        n: s1.n,
        s1: Some(row1),
        s2: Some(row2),
        cross: Some(RepeatCross {
            delta: [d1, d2],
            std_err: [se1, se2],
            z: [z1, z2],
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gvt::celtics_dataset;
    use crate::ingest::Trip;
    use approx::assert_abs_diff_eq;

    fn pct1(x: f64) -> f64 {
        (x * 1000.0).round() / 10.0
    }

    #[test]
    fn diff_se_z_pooled_celtics() {
        let (diff, se, z) = diff_se_z(1473, 1590, 2049).unwrap();
        assert_abs_diff_eq!(diff, 117.0 / 2049.0, epsilon = 1e-15);
        assert_abs_diff_eq!(se, 0.0135449, epsilon = 1e-6);
        assert_abs_diff_eq!(z, 4.21567, epsilon = 1e-4);

        // Maxwell row: diff 9.3%, standard error close to 3.0%.
        let (diff, se, _) = diff_se_z(302, 342, 430).unwrap();
        assert_eq!(pct1(diff), 9.3);
        assert!((se - 0.030).abs() < 1e-3, "se {se}");
    }

    #[test]
    fn diff_se_z_edge_cases() {
        assert!(diff_se_z(1, 1, 0).is_err());
        let (d, s, z) = diff_se_z(5, 5, 5).unwrap();
        assert_eq!((d, s, z), (0.0, 0.0, 0.0));
        // All first shots missed, all second shots hit: variance collapses.
        assert!(matches!(
            diff_se_z(0, 4, 4),
            Err(ClassicalError::DegenerateCounts { .. })
        ));
    }

    #[test]
    fn pooled_matches_celtics_table() {
        let rows = pair_stats(&celtics_dataset(), Grouping::Pooled, SeFormula::Independent);
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert_eq!((row.n, row.h1, row.h2), (2049, 1473, 1590));
        assert_eq!(pct1(row.pct1), 71.9);
        assert_eq!(pct1(row.pct2), 77.6);
        assert_eq!(pct1(row.diff), 5.7);
    }

    #[test]
    fn per_player_matches_celtics_rows() {
        let rows = pair_stats(
            &celtics_dataset(),
            Grouping::PerPlayer,
            SeFormula::Independent,
        );
        assert_eq!(rows.len(), 9);
        let parish = rows.iter().find(|r| r.label == "Parish").unwrap();
        assert_eq!(pct1(parish.pct1), 67.0);
        assert_eq!(pct1(parish.pct2), 75.8);
        assert_eq!(pct1(parish.diff), 8.8);
        let mchale = rows.iter().find(|r| r.label == "McHale").unwrap();
        assert_eq!(pct1(mchale.diff), -3.4);
    }

    #[test]
    fn pooled_equals_sum_of_players() {
        let table = celtics_dataset();
        let players = pair_stats(&table, Grouping::PerPlayer, SeFormula::Independent);
        let pooled = &pair_stats(&table, Grouping::Pooled, SeFormula::Independent)[0];
        let h1: usize = players.iter().map(|r| r.h1).sum();
        let h2: usize = players.iter().map(|r| r.h2).sum();
        assert_eq!((h1, h2), (pooled.h1, pooled.h2));
    }

    #[test]
    fn mcnemar_formula_on_celtics() {
        let rows = pair_stats(&celtics_dataset(), Grouping::Pooled, SeFormula::McNemar);
        // b = 428 miss-hit, c = 311 hit-miss discordant pairs.
        let z = rows[0].z.unwrap();
        assert_abs_diff_eq!(z, 4.3235, epsilon = 1e-3);
    }

    #[test]
    fn players_without_qualifying_trips_are_omitted() {
        let trips = vec![
            trip_helper("A", "G", 1, 0.0, &[true]),
            trip_helper("B", "G", 1, 5.0, &[true, false]),
        ];
        let table = TripTable::from_trips(trips).unwrap();
        let rows = pair_stats(&table, Grouping::PerPlayer, SeFormula::Independent);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].label, "B");
    }

    fn trip_helper(player: &str, game: &str, idx: u32, t: f64, outcomes: &[bool]) -> Trip {
        Trip {
            player_id: player.into(),
            game_id: game.into(),
            outcomes: outcomes.to_vec(),
            intra_game_index: idx,
            elapsed_seconds: t,
        }
    }

    #[test]
    fn degenerate_single_trip_row_has_no_z() {
        let table = TripTable::from_trips(vec![Trip {
            player_id: "P".into(),
            game_id: "G".into(),
            outcomes: vec![true, false],
            intra_game_index: 1,
            elapsed_seconds: 0.0,
        }])
        .unwrap();
        let rows = pair_stats(&table, Grouping::PerPlayer, SeFormula::Independent);
        assert_eq!(rows[0].pct1, 1.0);
        assert_eq!(rows[0].pct2, 0.0);
        assert!(rows[0].z.is_none());
    }

    fn trip(player: &str, game: &str, idx: u32, t: f64, outcomes: &[bool]) -> Trip {
        Trip {
            player_id: player.into(),
            game_id: game.into(),
            outcomes: outcomes.to_vec(),
            intra_game_index: idx,
            elapsed_seconds: t,
        }
    }

    #[test]
    fn trip_length_classes_and_total() {
        let trips = vec![
            trip("A", "G", 1, 0.0, &[true]),
            trip("A", "G", 2, 10.0, &[true]),
            trip("A", "G", 3, 20.0, &[true]),
            trip("B", "G", 1, 5.0, &[true, false]),
            trip("B", "G", 2, 15.0, &[false, true]),
            trip("B", "G", 3, 25.0, &[true, true, false]),
        ];
        let table = TripTable::from_trips(trips).unwrap();
        let rows = trip_length_table(&table);

        let one = &rows[0];
        assert_eq!(one.n, 3);
        assert_eq!(one.pct[0], Some(1.0));
        assert_eq!(one.pct[1], None);

        let two = &rows[1];
        assert_eq!(two.n, 2);
        assert_eq!(two.h[0], Some(1));
        assert_eq!(two.h[1], Some(1));
        assert_eq!(two.delta12, Some(0.0));

        let three = &rows[2];
        assert_eq!(three.n, 1);
        assert_eq!(three.pct[2], Some(0.0));

        let total = &rows[3];
        assert_eq!(total.n, 6);
        assert_eq!(total.attempts[0], Some(6));
        assert_eq!(total.attempts[1], Some(3));
        assert_eq!(total.attempts[2], Some(1));
        assert_eq!(total.h[0], Some(5));
        // Total Pct1 is the trip-count-weighted average of class Pct1 values.
        let weighted = (3.0 * 1.0 + 2.0 * 0.5 + 1.0 * 1.0) / 6.0;
        assert_abs_diff_eq!(total.pct[0].unwrap(), weighted, epsilon = 1e-15);
        assert_eq!(total.z12, None);
    }

    #[test]
    fn empty_class_has_absent_stats() {
        let table = TripTable::from_trips(vec![trip("A", "G", 1, 0.0, &[true])]).unwrap();
        let rows = trip_length_table(&table);
        assert_eq!(rows[1].n, 0);
        assert_eq!(rows[1].pct[0], None);
    }

    #[test]
    fn repeat_trips_pairs_first_and_second() {
        let trips = vec![
            trip("A", "G1", 1, 0.0, &[true, true]),
            trip("A", "G1", 2, 100.0, &[false, true]),
            trip("A", "G1", 3, 200.0, &[false, false]), // third qualifying: ignored
            trip("B", "G1", 1, 50.0, &[true, false]),   // only one: ignored
            trip("B", "G2", 1, 10.0, &[true, true]),    // different game, one each: ignored
        ];
        let table = TripTable::from_trips(trips).unwrap();
        let result = repeat_trip_table(&table, SeFormula::Independent);
        assert_eq!(result.n, 1);
        let s1 = result.s1.unwrap();
        let s2 = result.s2.unwrap();
        assert_eq!((s1.h1, s1.h2), (1, 1));
        assert_eq!((s2.h1, s2.h2), (0, 1));
        let cross = result.cross.unwrap();
        assert_abs_diff_eq!(cross.delta[0], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn one_shot_trips_never_qualify_for_repeat() {
        let trips = vec![
            trip("A", "G1", 1, 0.0, &[true]),
            trip("A", "G1", 2, 10.0, &[true]),
        ];
        let table = TripTable::from_trips(trips).unwrap();
        let result = repeat_trip_table(&table, SeFormula::Independent);
        assert_eq!(result.n, 0);
        assert!(result.s1.is_none());
    }

    #[test]
    fn stats_invariant_to_trip_order() {
        let table = celtics_dataset();
        let mut trips: Vec<Trip> = table.iter_trips().cloned().collect();
        trips.reverse();
        let reversed = TripTable::from_trips(trips).unwrap();
        let a = pair_stats(&table, Grouping::PerPlayer, SeFormula::Independent);
        let mut b = pair_stats(&reversed, Grouping::PerPlayer, SeFormula::Independent);
        b.sort_by(|x, y| x.label.cmp(&y.label));
        let mut a = a;
        a.sort_by(|x, y| x.label.cmp(&y.label));
        assert_eq!(a, b);
        assert_eq!(trip_length_table(&table), trip_length_table(&reversed));
    }
}
