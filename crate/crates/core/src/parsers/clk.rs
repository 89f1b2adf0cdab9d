//! RINEX clock files (satellite `AS` records).

use super::{fortran_f64, header_label, malformed, parse_sv, read_text, sort_nodes, ClkNode, ParseError};
use crate::time::{calendar_to_gps_millis, TimeScale};
use std::path::Path;

pub fn parse_clk(path: impl AsRef<Path>) -> Result<Vec<ClkNode>, ParseError> {
    parse_clk_str(&read_text(path)?)
}

pub fn parse_clk_str(text: &str) -> Result<Vec<ClkNode>, ParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut scale = TimeScale::Gps;
    let mut body_start = None;
    for (i, line) in lines.iter().enumerate() {
        let label = header_label(line);
        if label.starts_with("TIME SYSTEM ID") {
            if let Some(s) = TimeScale::from_label(line.get(..60).unwrap_or("")) {
                scale = s;
            }
        } else if label.starts_with("END OF HEADER") {
            body_start = Some(i + 1);
            break;
        }
    }
    let body_start = body_start.ok_or(ParseError::MissingEndOfHeader)?;

    let mut nodes = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(body_start) {
        if !line.starts_with("AS ") {
            continue;
        }
        let lineno = i + 1;
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() < 10 {
            return Err(malformed(lineno, "short AS record"));
        }
        let (gnss_id, sv_id) = parse_sv(tok[1]).ok_or_else(|| malformed(lineno, "bad satellite id"))?;
        let int = |k: usize| -> Result<u32, ParseError> {
            tok[k].parse::<u32>().map_err(|_| malformed(lineno, "bad epoch field"))
        };
        let year = i32::try_from(int(2)?).map_err(|_| malformed(lineno, "bad year"))?;
        let second = fortran_f64(tok[7]).ok_or_else(|| malformed(lineno, "bad seconds"))?;
        let t = calendar_to_gps_millis(scale, year, int(3)?, int(4)?, int(5)?, int(6)?, second)
            .map_err(|_| malformed(lineno, "invalid epoch"))?;
        let nvals: usize = tok[8].parse().map_err(|_| malformed(lineno, "bad value count"))?;
        if nvals == 0 {
            return Err(malformed(lineno, "AS record without values"));
        }
        let clk_s = fortran_f64(tok[9]).ok_or_else(|| malformed(lineno, "bad clock value"))?;
        let clk_sigma_s = if nvals >= 2 { tok.get(10).and_then(|s| fortran_f64(s)) } else { None };
        nodes.push(ClkNode {
            gps_millis: t.0,
            gnss_id,
            sv_id,
            clk_s,
            clk_sigma_s,
        });
    }
    sort_nodes(&mut nodes, |n| (n.gnss_id, n.sv_id, n.gps_millis), &mut warnings);
    for w in &warnings {
        log::warn!("clk: {w}");
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = concat!(
        "3.04           C                   G                   RINEX VERSION / TYPE\n",
        "GPS                                                         TIME SYSTEM ID\n",
        "                                                            END OF HEADER\n",
    );

    #[test]
    fn satellite_record() {
        let text = format!("{HEADER}AS G05  2021 01 01 00 00  0.000000  1   -2.618944e-04\n");
        let nodes = parse_clk_str(&text).unwrap();
        assert_eq!(nodes.len(), 1);
        assert_eq!(nodes[0].clk_s, -2.618944e-4);
        assert_eq!(nodes[0].sv_id, 5);
        assert_eq!(nodes[0].gps_millis, 1_293_494_400_000.0);
        assert_eq!(nodes[0].clk_sigma_s, None);
    }

    #[test]
    fn receiver_records_ignored() {
        let text = format!(
            "{HEADER}AR ALGO 2021 01 01 00 00  0.000000  2    1.0e-09  1.0e-11\n\
             AR BRUX 2021 01 01 00 00 30.000000  1    2.0e-09\n"
        );
        assert!(parse_clk_str(&text).unwrap().is_empty());
    }

    #[test]
    fn sigma_read_when_present() {
        let text = format!("{HEADER}AS E11  2021 01 01 00 00 30.000000  2    1.5e-04  2.0e-11\n");
        let n = parse_clk_str(&text).unwrap();
        assert_eq!(n[0].clk_sigma_s, Some(2.0e-11));
    }

    #[test]
    fn missing_terminator() {
        assert!(matches!(
            parse_clk_str("3.04           C\n"),
            Err(ParseError::MissingEndOfHeader)
        ));
    }
}
