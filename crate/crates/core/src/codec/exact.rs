//! Exact rational arithmetic coding over a fixed probability model.
//!
//! Slow, unbounded precision; used to inspect message intervals and decode points.

use num_rational::Ratio;

pub type Q = Ratio<i128>;

/// Fixed model given as rational probabilities summing to one.
#[derive(Clone, Debug)]
pub struct ExactModel {
    cum: Vec<Q>,
}

impl ExactModel {
    /// Builds a model from integer weights; probabilities are weight / sum.
    pub fn from_weights(weights: &[i128]) -> Self {
        let total: i128 = weights.iter().sum();
        let mut cum = vec![Q::from_integer(0)];
        let mut acc = 0;
        for w in weights {
            acc += w;
            cum.push(Q::new(acc, total));
        }
        Self { cum }
    }

    pub fn symbol_range(&self, symbol: usize) -> (Q, Q) {
        (self.cum[symbol], self.cum[symbol + 1])
    }

    /// Interval left after coding each symbol of `message` in turn.
    pub fn message_interval(&self, message: &[usize]) -> (Q, Q) {
        let (mut lo, mut hi) = (Q::from_integer(0), Q::from_integer(1));
        for &s in message {
            let (a, b) = self.symbol_range(s);
            let width = hi - lo;
            hi = lo + width * b;
            lo += width * a;
        }
        (lo, hi)
    }

    /// Decodes symbols from the point `x` in [0,1) until `eof` or `max_len` symbols.
    pub fn decode_point(&self, mut x: Q, eof: usize, max_len: usize) -> Vec<usize> {
        let mut out = Vec::new();
        while out.len() < max_len {
            let Some(s) = (0..self.cum.len() - 1).find(|&s| x >= self.cum[s] && x < self.cum[s + 1]) else {
                break;
            };
            out.push(s);
            if s == eof {
                break;
            }
            let (a, b) = self.symbol_range(s);
            x = (x - a) / (b - a);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_symbol_interval() {
        let m = ExactModel::from_weights(&[50, 25, 15, 10]);
        assert_eq!(m.message_interval(&[3]), (Q::new(9, 10), Q::from_integer(1)));
    }

    #[test]
    fn decode_stops_at_eof() {
        let m = ExactModel::from_weights(&[1, 1]);
        assert_eq!(m.decode_point(Q::new(3, 4), 1, 10), vec![1]);
        assert_eq!(m.decode_point(Q::new(1, 16), 1, 10), vec![0, 0, 0, 1]);
    }
}
