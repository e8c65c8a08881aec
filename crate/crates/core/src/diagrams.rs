//! Time orderings of `m` creations and `m` annihilations as ballot paths in
//! excitation space.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Step {
    /// `a`, one excitation leaves the system (downward arrow).
    Annihilate,
    /// `a†`, one excitation enters the system (upward arrow).
    Create,
}

impl Step {
    pub fn delta(self) -> i32 {
        match self {
            Step::Create => 1,
            Step::Annihilate => -1,
        }
    }
}

/// A path that starts and ends at the vacuum, steps recorded earliest first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Diagram {
    steps: Vec<Step>,
}

impl Diagram {
    /// Validate a step sequence: nonnegative levels, balanced, nonempty.
    pub fn new(steps: Vec<Step>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidArgument("a diagram needs at least one step".into()));
        }
        let mut level = 0i32;
        for (i, step) in steps.iter().enumerate() {
            level += step.delta();
            if level < 0 {
                return Err(Error::InvalidArgument(format!("path drops below the vacuum at step {}", i + 1)));
            }
        }
        if level != 0 {
            return Err(Error::InvalidArgument("path does not return to the vacuum".into()));
        }
        Ok(Diagram { steps })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Photon number `m`.
    pub fn order(&self) -> usize {
        self.steps.len() / 2
    }

    /// Excitation level after each step, `ℓ_1 .. ℓ_2m`.
    pub fn levels(&self) -> Vec<usize> {
        let mut level = 0i32;
        self.steps
            .iter()
            .map(|s| {
                level += s.delta();
                level as usize
            })
            .collect()
    }

    pub fn max_level(&self) -> usize {
        self.levels().into_iter().max().unwrap_or(0)
    }

    /// True when the path returns to the vacuum before its last step.
    pub fn crosses_vacuum(&self) -> bool {
        let levels = self.levels();
        levels[..levels.len() - 1].contains(&0)
    }
}

/// All ballot paths of `m` up- and `m` down-steps whose level never
/// exceeds `cap`, in lexicographic order of their step sequences
/// (annihilation sorts before creation).
pub fn enumerate_diagrams(m: usize, cap: usize) -> Vec<Diagram> {
    let mut out = Vec::new();
    if m == 0 || cap == 0 {
        return out;
    }
    let mut steps = Vec::with_capacity(2 * m);
    extend(m, m, 0, cap, &mut steps, &mut out);
    out
}

fn extend(ups: usize, downs: usize, level: usize, cap: usize, steps: &mut Vec<Step>, out: &mut Vec<Diagram>) {
    if ups == 0 && downs == 0 {
        out.push(Diagram { steps: steps.clone() });
        return;
    }
    if downs > 0 && level > 0 {
        steps.push(Step::Annihilate);
        extend(ups, downs - 1, level - 1, cap, steps, out);
        steps.pop();
    }
    if ups > 0 && level < cap {
        steps.push(Step::Create);
        extend(ups - 1, downs, level + 1, cap, steps, out);
        steps.pop();
    }
}

/// Operator string with the latest time leftmost, e.g. `⟨a a a† a†⟩`.
pub fn diagram_label(diagram: &Diagram) -> String {
    let ops: Vec<&str> = diagram
        .steps
        .iter()
        .rev()
        .map(|s| match s {
            Step::Create => "a†",
            Step::Annihilate => "a",
        })
        .collect();
    format!("⟨{}⟩", ops.join(" "))
}

/// Parse the notation produced by [`diagram_label`]. Whitespace between
/// operators is optional.
pub fn parse_label(label: &str) -> Result<Diagram> {
    let inner = label
        .trim()
        .strip_prefix('⟨')
        .and_then(|s| s.strip_suffix('⟩'))
        .ok_or_else(|| Error::InvalidArgument(format!("`{label}` is not enclosed in ⟨ ⟩")))?;
    let mut latest_first = Vec::new();
    let mut chars = inner.chars().filter(|c| !c.is_whitespace()).peekable();
    while let Some(c) = chars.next() {
        if c != 'a' {
            return Err(Error::InvalidArgument(format!("unexpected `{c}` in `{label}`")));
        }
        if chars.peek() == Some(&'†') {
            chars.next();
            latest_first.push(Step::Create);
        } else {
            latest_first.push(Step::Annihilate);
        }
    }
    latest_first.reverse();
    Diagram::new(latest_first)
}

/// Two-row ASCII rendering of the level profile, one column per step.
pub fn level_profile(diagram: &Diagram) -> String {
    let levels = diagram.levels();
    let top = diagram.max_level();
    let mut rows = vec![String::new(); top + 1];
    let mut prev = 0usize;
    for (step, &level) in diagram.steps.iter().zip(&levels) {
        for (row_level, row) in (0..=top).rev().zip(rows.iter_mut()) {
            let (lo, hi) = (prev.min(level), prev.max(level));
            let c = if row_level > lo && row_level <= hi {
                match step {
                    Step::Create => '/',
                    Step::Annihilate => '\\',
                }
            } else {
                ' '
            };
            row.push(c);
        }
        prev = level;
    }
    let mut out = String::new();
    for (row_level, row) in (0..=top).rev().zip(rows) {
        if row_level == 0 {
            continue;
        }
        out.push_str(&format!("{row_level} |{}\n", row.trim_end()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use Step::{Annihilate as D, Create as U};

    #[test]
    fn four_point_diagrams() {
        let ds = enumerate_diagrams(2, 2);
        let labels: Vec<String> = ds.iter().map(diagram_label).collect();
        assert_eq!(labels, vec!["⟨a a† a a†⟩", "⟨a a a† a†⟩"]);
        assert_eq!(ds[0].steps(), &[U, D, U, D]);
        assert_eq!(ds[1].steps(), &[U, U, D, D]);
    }

    #[test]
    fn cap_one_keeps_the_loops() {
        for m in 1..7 {
            let ds = enumerate_diagrams(m, 1);
            assert_eq!(ds.len(), 1);
            assert!(ds[0].levels().iter().all(|&l| l <= 1));
        }
    }

    #[test]
    fn catalan_counts() {
        let counts: Vec<usize> = (1..=5).map(|m| enumerate_diagrams(m, m).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 14, 42]);
        assert_eq!(enumerate_diagrams(3, 10).len(), 5);
    }

    #[test]
    fn labels() {
        let d = Diagram::new(vec![U, D]).unwrap();
        assert_eq!(diagram_label(&d), "⟨a a†⟩");
        let d = Diagram::new(vec![U, D, U, U, D, D]).unwrap();
        assert_eq!(diagram_label(&d), "⟨a a a† a† a a†⟩");
        assert_eq!(parse_label("⟨aaa†a†aa†⟩").unwrap(), d);
    }

    #[test]
    fn label_round_trip() {
        for m in 1..6 {
            for d in enumerate_diagrams(m, m) {
                assert_eq!(parse_label(&diagram_label(&d)).unwrap(), d);
            }
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(Diagram::new(vec![D, U]).is_err());
        assert!(Diagram::new(vec![U, U, D]).is_err());
        assert!(Diagram::new(vec![]).is_err());
        assert!(parse_label("⟨a a† b⟩").is_err());
        assert!(parse_label("a a†").is_err());
        assert!(parse_label("⟨a† a⟩").is_err());
    }

    #[test]
    fn vacuum_crossing() {
        let ds = enumerate_diagrams(2, 2);
        assert!(ds[0].crosses_vacuum());
        assert!(!ds[1].crosses_vacuum());
    }

    #[test]
    fn profile_rendering() {
        let d = Diagram::new(vec![U, U, D, D]).unwrap();
        assert_eq!(level_profile(&d), "2 | /\\\n1 |/  \\\n");
    }

    fn ballot_count(m: usize, cap: usize) -> usize {
        // ways[l] after each step, levels 0..=cap
        let mut ways = vec![0usize; cap + 1];
        ways[0] = 1;
        for _ in 0..2 * m {
            let mut next = vec![0usize; cap + 1];
            for l in 0..=cap {
                if l > 0 {
                    next[l - 1] += ways[l];
                }
                if l < cap {
                    next[l + 1] += ways[l];
                }
            }
            ways = next;
        }
        ways[0]
    }

    #[test]
    fn matches_dynamic_programming_counts() {
        for m in 1..=6 {
            for cap in 1..=6 {
                assert_eq!(enumerate_diagrams(m, cap).len(), ballot_count(m, cap), "m={m} cap={cap}");
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn enumeration_invariants(m in 1usize..7, cap in 1usize..7) {
            let ds = enumerate_diagrams(m, cap);
            for d in &ds {
                proptest::prop_assert_eq!(d.order(), m);
                proptest::prop_assert!(d.max_level() <= cap);
                proptest::prop_assert_eq!(*d.levels().last().unwrap(), 0);
                proptest::prop_assert_eq!(&parse_label(&diagram_label(d)).unwrap(), d);
            }
            for pair in ds.windows(2) {
                proptest::prop_assert!(pair[0].steps() < pair[1].steps());
            }
        }
    }
}
