use std::io::Write;

use super::{CimError, WorkloadHistogram};

pub const HISTOGRAM_CSV_HEADER: [&str; 7] = ["offset", "dx", "dy", "dz", "pairs", "copies", "normalized_workload"];

pub fn write_histogram_csv<W: Write>(hist: &WorkloadHistogram, out: W) -> Result<(), CimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HISTOGRAM_CSV_HEADER)?;
    for (i, off) in hist.offsets.iter().enumerate() {
        w.serialize((i, off.dx, off.dy, off.dz, hist.pairs[i], hist.copies[i], hist.normalized(i)))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn histogram_csv(hist: &WorkloadHistogram) -> String {
    let mut buf = Vec::new();
    write_histogram_csv(hist, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_per_offset() {
        let h = WorkloadHistogram::from_counts(vec![8, 0, 3]).with_copies(vec![2, 0, 1]).unwrap();
        let text = histogram_csv(&h);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "offset,dx,dy,dz,pairs,copies,normalized_workload");
        assert_eq!(lines[1], "0,0,0,0,8,2,4.0");
        assert_eq!(lines[2], "1,1,0,0,0,0,0.0");
        assert_eq!(lines.len(), 4);
    }
}
