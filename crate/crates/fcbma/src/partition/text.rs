//! Textual partition forms: graycode strings and set-of-sets notation.
//!
//! `12233` and `(1)(23)(45)` denote the same partition. Set notation uses
//! 1-based level numbers, compact for up to nine levels and comma-separated
//! beyond that, e.g. `(1,8)(2)(7,9)` when commas are needed.

use super::{Partition, PartitionError};

const GRAYCODE_DIGITS: &[u8] = b"123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";

impl Partition {
    /// Graycode string, one character per level (`1`-`9` then `A`-`Z`).
    ///
    /// Panics if the partition has more than 35 blocks; use set notation for
    /// wider factors.
    pub fn graycode(&self) -> String {
        self.codes()
            .iter()
            .map(|&c| {
                assert!(
                    (c as usize) <= GRAYCODE_DIGITS.len(),
                    "graycode digits support at most 35 blocks"
                );
                GRAYCODE_DIGITS[c as usize - 1] as char
            })
            .collect()
    }

    /// Set-of-sets notation over 1-based level numbers.
    pub fn set_notation(&self) -> String {
        let labels: Vec<String> = (1..=self.n_levels()).map(|i| i.to_string()).collect();
        self.notation_with(&labels, self.n_levels() > 9)
    }

    /// Set-of-sets notation with level names substituted, always
    /// comma-separated within a block.
    pub fn set_notation_labeled(&self, labels: &[String]) -> String {
        assert_eq!(labels.len(), self.n_levels(), "one label per level");
        self.notation_with(labels, true)
    }

    fn notation_with(&self, labels: &[String], commas: bool) -> String {
        let sep = if commas { "," } else { "" };
        self.blocks()
            .iter()
            .map(|block| {
                let inner: Vec<&str> = block.iter().map(|&l| labels[l].as_str()).collect();
                format!("({})", inner.join(sep))
            })
            .collect()
    }
}

pub(super) fn parse(s: &str) -> Result<Partition, PartitionError> {
    let s = s.trim();
    let err = |reason: &str| PartitionError::ParseError {
        input: s.to_string(),
        reason: reason.to_string(),
    };
    if s.is_empty() {
        return Err(err("empty string"));
    }
    if s.starts_with('(') {
        parse_set_notation(s)
    } else {
        let mut raw = Vec::with_capacity(s.len());
        for ch in s.chars() {
            let up = ch.to_ascii_uppercase();
            let pos = GRAYCODE_DIGITS
                .iter()
                .position(|&d| d as char == up)
                .ok_or_else(|| err(&format!("invalid graycode character {ch:?}")))?;
            raw.push(pos + 1);
        }
        Partition::from_raw(&raw)
    }
}

fn parse_set_notation(s: &str) -> Result<Partition, PartitionError> {
    let err = |reason: String| PartitionError::ParseError {
        input: s.to_string(),
        reason,
    };
    let mut groups: Vec<Vec<usize>> = Vec::new();
    // With a comma anywhere, every block holds comma-separated level numbers;
    // otherwise the compact one-character-per-level form applies throughout.
    let comma_form = s.contains(',');
    let mut rest = s;
    while !rest.is_empty() {
        let rest2 = rest
            .strip_prefix('(')
            .ok_or_else(|| err("expected '('".into()))?;
        let close = rest2
            .find(')')
            .ok_or_else(|| err("unbalanced parentheses".into()))?;
        let body = &rest2[..close];
        rest = rest2[close + 1..].trim_start();
        let tokens: Vec<&str> = if comma_form {
            body.split(',').map(str::trim).collect()
        } else {
            body.split("").filter(|t| !t.is_empty()).collect()
        };
        if tokens.is_empty() {
            return Err(err("empty block".into()));
        }
        let mut levels = Vec::with_capacity(tokens.len());
        for t in tokens {
            let lvl: usize = t
                .parse()
                .map_err(|_| err(format!("invalid level number {t:?}")))?;
            if lvl == 0 {
                return Err(err("level numbers are 1-based".into()));
            }
            levels.push(lvl - 1);
        }
        groups.push(levels);
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let mut raw = vec![usize::MAX; n];
    for (b, group) in groups.iter().enumerate() {
        for &lvl in group {
            if lvl >= n {
                return Err(err(format!(
                    "level {} out of range for {n} levels",
                    lvl + 1
                )));
            }
            if raw[lvl] != usize::MAX {
                return Err(err(format!("level {} listed twice", lvl + 1)));
            }
            raw[lvl] = b + 1;
        }
    }
    Partition::from_raw(&raw)
}

#[cfg(test)]
mod tests {
    use super::super::Partition;

    #[test]
    fn graycode_and_set_notation_agree() {
        let p: Partition = "12233".parse().unwrap();
        assert_eq!(p.set_notation(), "(1)(23)(45)");
        assert_eq!(p.graycode(), "12233");
        let q: Partition = "(1)(23)(45)".parse().unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn comma_form_parses_and_prints_for_wide_factors() {
        let p: Partition = "(1,8)(2)(3)(4)(5)(6)(7,9)".parse().unwrap();
        assert_eq!(p.graycode(), "123456717");
        assert_eq!(p.set_notation(), "(18)(2)(3)(4)(5)(6)(79)");
        let wide: Partition = "(1,10)(2)(3)(4)(5)(6)(7)(8)(9)(11)".parse().unwrap();
        assert_eq!(wide.n_levels(), 11);
        assert_eq!(wide.set_notation(), "(1,10)(2)(3)(4)(5)(6)(7)(8)(9)(11)");
        let round: Partition = wide.set_notation().parse().unwrap();
        assert_eq!(round, wide);
    }

    #[test]
    fn graycode_letters_cover_blocks_past_nine() {
        let p = Partition::identity(12).unwrap();
        assert_eq!(p.graycode(), "123456789ABC");
        let back: Partition = "123456789abc".parse().unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn set_notation_in_any_block_order_canonicalizes() {
        let p: Partition = "(45)(1)(23)".parse().unwrap();
        assert_eq!(p.graycode(), "12233");
    }

    #[test]
    fn labeled_notation_substitutes_names() {
        let p: Partition = "12233".parse().unwrap();
        let labels: Vec<String> = ["<1k", "1k-15k", "15k-20k", "20k-25k", ">25k"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(
            p.set_notation_labeled(&labels),
            "(<1k)(1k-15k,15k-20k)(20k-25k,>25k)"
        );
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        for bad in ["", "(", "()", "(12)(2)", "(1)(3)", "1?2", "(0)(1)"] {
            assert!(bad.parse::<Partition>().is_err(), "{bad:?}");
        }
    }
}
