//! Scheme application: recoding factor levels to blocks under reference
//! dummy coding, plus response/offset/weight extraction and validation.

use super::{Family, GlmError, ModelTemplate};
use crate::data::Dataset;
use crate::scheme::CollapsingScheme;

/// A recoded view of a dataset under one collapsing scheme.
///
/// Only rows with positive prior weight are retained. Column 0 is the
/// intercept; each factor with `k >= 2` blocks contributes `k - 1` dummy
/// columns for blocks `2..=k` (block 1 is the reference). A single-block
/// factor contributes nothing and is thereby excluded from the model.
#[derive(Debug)]
pub struct DesignView {
    n_cols: usize,
    /// Per factor: (name, first dummy column, block count).
    layout: Vec<(String, usize, usize)>,
    /// Per factor, per used row: 1-based block index.
    blocks: Vec<Vec<u8>>,
    y: Vec<f64>,
    offset: Vec<f64>,
    weights: Vec<f64>,
    rows_used: Vec<usize>,
}

impl DesignView {
    pub fn n_rows_used(&self) -> usize {
        self.y.len()
    }

    /// Columns including the intercept.
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Dummy columns contributed by one factor under the applied scheme.
    pub fn dummy_columns_for(&self, factor: &str) -> Option<usize> {
        self.layout
            .iter()
            .find(|(name, _, _)| name == factor)
            .map(|&(_, _, k)| k.saturating_sub(1))
    }

    pub fn response(&self) -> &[f64] {
        &self.y
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Original dataset row behind each used row.
    pub fn rows_used(&self) -> &[usize] {
        &self.rows_used
    }

    /// Active design columns of one row besides the intercept.
    pub(crate) fn active_cols(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        self.layout
            .iter()
            .enumerate()
            .filter_map(move |(f, &(_, start, _))| {
                let block = self.blocks[f][row] as usize;
                (block >= 2).then(|| start + block - 2)
            })
    }

    /// Errors if any block of any factor has no observations (an all-zero
    /// dummy column, i.e. a rank-deficient design).
    pub(crate) fn check_full_rank(&self) -> Result<(), GlmError> {
        for (f, &(ref name, _, k)) in self.layout.iter().enumerate() {
            let mut seen = vec![false; k + 1];
            for &b in &self.blocks[f] {
                seen[b as usize] = true;
            }
            for block in 1..=k {
                if !seen[block] {
                    return Err(GlmError::EmptyBlock {
                        factor: name.clone(),
                        block,
                    });
                }
            }
        }
        Ok(())
    }

    /// Maps a design column (>= 1) back to its factor name.
    pub(crate) fn factor_of_col(&self, col: usize) -> Option<&str> {
        self.layout
            .iter()
            .find(|&&(_, start, k)| col >= start && col < start + k.saturating_sub(1))
            .map(|(name, _, _)| name.as_str())
    }
}

pub(super) fn build(
    data: &Dataset,
    template: &ModelTemplate,
    scheme: &CollapsingScheme,
) -> Result<DesignView, GlmError> {
    if scheme.len() != template.factors.len() {
        return Err(GlmError::SchemeMismatch(format!(
            "scheme has {} factors, template has {}",
            scheme.len(),
            template.factors.len()
        )));
    }
    let y_all = data.numeric(&template.response)?;
    let weights_all = match &template.weight {
        Some(col) => Some(data.numeric(col)?),
        None => None,
    };
    let exposure_all = match &template.exposure {
        Some(col) => Some(data.numeric(col)?),
        None => None,
    };

    // rows with positive prior weight
    let mut rows_used = Vec::with_capacity(data.n_rows());
    for row in 0..data.n_rows() {
        match weights_all {
            Some(w) => {
                if w[row] < 0.0 {
                    return Err(GlmError::InvalidWeight {
                        row,
                        value: w[row],
                    });
                }
                if w[row] > 0.0 {
                    rows_used.push(row);
                }
            }
            None => rows_used.push(row),
        }
    }
    if rows_used.is_empty() {
        return Err(GlmError::NoUsableRows);
    }

    let mut y = Vec::with_capacity(rows_used.len());
    for &row in &rows_used {
        let v = y_all[row];
        match template.family {
            Family::Poisson => {
                if v < 0.0 || (v - v.round()).abs() > 1e-8 {
                    return Err(GlmError::InvalidResponse {
                        family: Family::Poisson,
                        row,
                        value: v,
                        reason: "requires nonnegative integer counts",
                    });
                }
            }
            Family::Gamma => {
                if v <= 0.0 {
                    return Err(GlmError::InvalidResponse {
                        family: Family::Gamma,
                        row,
                        value: v,
                        reason: "requires strictly positive response",
                    });
                }
            }
        }
        y.push(v);
    }

    let mut offset = vec![0.0; rows_used.len()];
    if let Some(e) = exposure_all {
        for (i, &row) in rows_used.iter().enumerate() {
            if e[row] <= 0.0 {
                return Err(GlmError::InvalidExposure {
                    row,
                    value: e[row],
                });
            }
            offset[i] = e[row].ln();
        }
    }
    let weights = match weights_all {
        Some(w) => rows_used.iter().map(|&r| w[r]).collect(),
        None => vec![1.0; rows_used.len()],
    };

    let mut layout = Vec::with_capacity(template.factors.len());
    let mut blocks = Vec::with_capacity(template.factors.len());
    let mut col = 1usize;
    for spec in &template.factors {
        let partition = scheme.get(&spec.name).ok_or_else(|| {
            GlmError::SchemeMismatch(format!("scheme is missing factor {:?}", spec.name))
        })?;
        if partition.n_levels() != spec.levels.len() {
            return Err(GlmError::SchemeMismatch(format!(
                "partition for {:?} has {} levels, vocabulary has {}",
                spec.name,
                partition.n_levels(),
                spec.levels.len()
            )));
        }
        let data_col = data.factor(&spec.name)?;
        // data vocabulary -> training vocabulary -> block
        let mut code_to_block = Vec::with_capacity(data_col.levels().len());
        for level in data_col.levels() {
            match spec.levels.iter().position(|l| l == level) {
                Some(idx) => code_to_block.push(partition.block_of(idx) as u8),
                None => code_to_block.push(0),
            }
        }
        let mut fac_blocks = Vec::with_capacity(rows_used.len());
        for &row in &rows_used {
            let code = data_col.codes()[row];
            let block = code_to_block[code as usize];
            if block == 0 {
                return Err(GlmError::UnseenLevel {
                    factor: spec.name.clone(),
                    level: data_col.level_name(code).to_string(),
                });
            }
            fac_blocks.push(block);
        }
        let k = partition.n_blocks();
        layout.push((spec.name.clone(), col, k));
        blocks.push(fac_blocks);
        col += k - 1;
    }

    Ok(DesignView {
        n_cols: col,
        layout,
        blocks,
        y,
        offset,
        weights,
        rows_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{ConstraintSet, Partition};
    use crate::scheme::CollapsingScheme;

    fn five_level_data() -> Dataset {
        let levels: Vec<String> = (1..=5).map(|i| i.to_string()).collect();
        let mut col = Vec::new();
        let mut y = Vec::new();
        for (i, l) in levels.iter().enumerate() {
            for _ in 0..3 {
                col.push(l.clone());
                y.push(i as f64 + 1.0);
            }
        }
        Dataset::builder()
            .numeric("y", y)
            .factor("f", col)
            .build()
            .unwrap()
    }

    fn template(data: &Dataset) -> ModelTemplate {
        ModelTemplate::new(Family::Poisson, "y")
            .add_factor_from(data, "f", ConstraintSet::none())
            .unwrap()
    }

    fn scheme(p: &str) -> CollapsingScheme {
        CollapsingScheme::new([("f".to_string(), p.parse::<Partition>().unwrap())]).unwrap()
    }

    #[test]
    fn full_collapse_drops_the_factor() {
        let data = five_level_data();
        let t = template(&data);
        let d = build(&data, &t, &scheme("11111")).unwrap();
        assert_eq!(d.n_cols(), 1);
        assert_eq!(d.dummy_columns_for("f"), Some(0));
    }

    #[test]
    fn partial_collapse_counts_dummies() {
        let data = five_level_data();
        let t = template(&data);
        let d = build(&data, &t, &scheme("12233")).unwrap();
        assert_eq!(d.n_cols(), 3);
        assert_eq!(d.dummy_columns_for("f"), Some(2));
        let d = build(&data, &t, &scheme("12345")).unwrap();
        assert_eq!(d.n_cols(), 5);
        assert_eq!(d.dummy_columns_for("f"), Some(4));
    }

    #[test]
    fn level_count_mismatch_is_an_error() {
        let data = five_level_data();
        let t = template(&data);
        let err = build(&data, &t, &scheme("1234")).unwrap_err();
        assert!(matches!(err, GlmError::SchemeMismatch(_)));
    }

    #[test]
    fn zero_weight_rows_are_dropped() {
        let data = Dataset::builder()
            .numeric("y", vec![1.0, 2.0, 3.0])
            .numeric("w", vec![1.0, 0.0, 2.0])
            .factor("f", vec!["a".into(), "a".into(), "b".into()])
            .build()
            .unwrap();
        let t = ModelTemplate::new(Family::Gamma, "y")
            .with_weight("w")
            .add_factor_from(&data, "f", ConstraintSet::none())
            .unwrap();
        let s = CollapsingScheme::new([("f".to_string(), Partition::identity(2).unwrap())]).unwrap();
        let d = build(&data, &t, &s).unwrap();
        assert_eq!(d.n_rows_used(), 2);
        assert_eq!(d.rows_used(), &[0, 2]);
    }

    #[test]
    fn empty_block_detected_as_rank_deficiency() {
        let data = Dataset::builder()
            .numeric("y", vec![1.0, 2.0])
            .factor("f", vec!["a".into(), "b".into()])
            .build()
            .unwrap();
        // template vocabulary says three levels, data only carries two
        let t = ModelTemplate::new(Family::Poisson, "y").add_factor(
            "f",
            vec!["a".into(), "b".into(), "c".into()],
            ConstraintSet::none(),
        );
        let s = CollapsingScheme::new([("f".to_string(), Partition::identity(3).unwrap())]).unwrap();
        let d = build(&data, &t, &s).unwrap();
        let err = d.check_full_rank().unwrap_err();
        assert!(matches!(err, GlmError::EmptyBlock { block: 3, .. }));
    }
}
