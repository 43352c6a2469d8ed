use std::collections::BTreeMap;

use super::{ProbError, Result, NORM_TOL};

/// A conditional distribution from one variable group to another.
///
/// Rows exist only for the input tuples that were declared reachable;
/// each row is a sparse distribution over output tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    inputs: Vec<String>,
    input_alphabets: Vec<Vec<String>>,
    outputs: Vec<String>,
    output_alphabets: Vec<Vec<String>>,
    rows: BTreeMap<Vec<usize>, Vec<(Vec<usize>, f64)>>,
}

impl Channel {
    pub fn new(
        inputs: Vec<String>,
        input_alphabets: Vec<Vec<String>>,
        outputs: Vec<String>,
        output_alphabets: Vec<Vec<String>>,
        rows: BTreeMap<Vec<usize>, Vec<(Vec<usize>, f64)>>,
    ) -> Result<Self> {
        for (input, row) in &rows {
            if input.len() != inputs.len() {
                return Err(ProbError::ArityMismatch {
                    expected: inputs.len(),
                    got: input.len(),
                });
            }
            let mut sum = 0.0;
            for (o, p) in row {
                if o.len() != outputs.len() {
                    return Err(ProbError::ArityMismatch {
                        expected: outputs.len(),
                        got: o.len(),
                    });
                }
                if *p < 0.0 {
                    return Err(ProbError::NegativeMass { p: *p });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > NORM_TOL {
                return Err(ProbError::ChannelRow {
                    row: format!("{input:?}"),
                    sum,
                });
            }
        }
        Ok(Self {
            inputs,
            input_alphabets,
            outputs,
            output_alphabets,
            rows,
        })
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn input_alphabets(&self) -> &[Vec<String>] {
        &self.input_alphabets
    }

    pub fn output_alphabets(&self) -> &[Vec<String>] {
        &self.output_alphabets
    }

    pub fn row(&self, input: &[usize]) -> Option<&[(Vec<usize>, f64)]> {
        self.rows.get(input).map(|r| r.as_slice())
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[usize], &[(Vec<usize>, f64)])> {
        self.rows.iter().map(|(k, v)| (k.as_slice(), v.as_slice()))
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// `P(output | input)`; zero for undeclared rows or outputs.
    pub fn prob(&self, input: &[usize], output: &[usize]) -> f64 {
        self.rows
            .get(input)
            .and_then(|r| r.iter().find(|(o, _)| o.as_slice() == output))
            .map_or(0.0, |(_, p)| *p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized_row() {
        let mut rows = BTreeMap::new();
        rows.insert(vec![0], vec![(vec![0], 0.5), (vec![1], 0.4)]);
        let r = Channel::new(
            vec!["A".into()],
            vec![vec!["0".into()]],
            vec!["B".into()],
            vec![vec!["0".into(), "1".into()]],
            rows,
        );
        assert!(matches!(r, Err(ProbError::ChannelRow { .. })));
    }
}
