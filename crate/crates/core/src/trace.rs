//! Long-format CSV traces: one row per recorded iteration per player.

use std::io::{self, Write};

use crate::metrics::IterationRecord;

pub const HEADER: &str = "k,player,action,consensus_error,ne_residual,guard_activations,elapsed_us";

/// Writes `records` as CSV. Without `timing` the `elapsed_us` column is 0,
/// which keeps repeated runs byte-identical.
pub fn write_trace<W: Write>(mut out: W, records: &[IterationRecord], timing: bool) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in records {
        let elapsed = if timing { r.elapsed.as_micros() } else { 0 };
        for (player, action) in r.actions.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.k, player, action, r.consensus_error, r.ne_residual, r.guard_activations, elapsed
            )?;
        }
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    #[test]
    fn long_format() {
        let records = vec![IterationRecord {
            k: 3,
            actions: vec![0.5, 1.0],
            consensus_error: 0.25,
            ne_residual: 1e-7,
            guard_activations: 0,
            elapsed: Duration::from_micros(42),
        }];
        let mut buf = Vec::new();
        write_trace(&mut buf, &records, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, format!("{HEADER}\n3,0,0.5,0.25,0.0000001,0,0\n3,1,1,0.25,0.0000001,0,0\n"));
        let mut buf = Vec::new();
        write_trace(&mut buf, &records, true).unwrap();
        assert!(String::from_utf8(buf).unwrap().lines().nth(1).unwrap().ends_with(",42"));
    }
}
