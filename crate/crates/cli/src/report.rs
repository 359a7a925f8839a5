//! Charts and derived columns for simulation results files.

use std::collections::BTreeMap;
use std::fmt::Write;

const REQUIRED: [&str; 6] = ["kind", "setting", "delta", "statistic", "value", "reps_ok"];
const COLORS: [&str; 3] = ["#1b6ca8", "#d1495b", "#2e933c"];

pub struct RateRow {
    pub setting: usize,
    pub delta: f64,
    pub statistic: String,
    pub value: f64,
    pub reps: usize,
}

pub struct ResultsTable {
    headers: csv::StringRecord,
    records: Vec<csv::StringRecord>,
    /// Parallel to `records`; `None` for non-rate rows.
    rates: Vec<Option<RateRow>>,
}

impl ResultsTable {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| format!("cannot read header: {e}"))?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| format!("missing column `{name}`"));
        let idx: Vec<usize> = REQUIRED.iter().map(|n| col(n)).collect::<Result<_, _>>()?;
        let mut records = Vec::new();
        let mut rates = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| format!("row {}: {e}", line + 2))?;
            let get = |i: usize| rec.get(idx[i]).unwrap_or("");
            let rate = if get(0) == "rate" {
                let num = |i: usize| get(i).parse::<f64>().map_err(|_| format!("row {}: bad {} {:?}", line + 2, REQUIRED[i], get(i)));
                Some(RateRow {
                    setting: num(1)? as usize,
                    delta: num(2)?,
                    statistic: get(3).to_string(),
                    value: num(4)?,
                    reps: num(5)? as usize,
                })
            } else {
                None
            };
            records.push(rec);
            rates.push(rate);
        }
        if rates.iter().all(Option::is_none) {
            return Err("results file has no rate rows".into());
        }
        Ok(ResultsTable { headers, records, rates })
    }

    /// The input with an `mc_se` column: √(α̂(100 − α̂)/N) for rate rows.
    pub fn with_mc_se(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut h = self.headers.clone();
        h.push_field("mc_se");
        w.write_record(&h).expect("in-memory write");
        for (rec, rate) in self.records.iter().zip(&self.rates) {
            let mut r = rec.clone();
            let se = rate.as_ref().filter(|x| x.reps > 0).map(|x| (x.value * (100.0 - x.value) / x.reps as f64).sqrt());
            r.push_field(&se.map(|v| format!("{v:.4}")).unwrap_or_default());
            w.write_record(&r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Rejection rate against δ when settings differ in δ (a power curve),
/// otherwise against setting number; one polyline per statistic.
pub fn svg(table: &ResultsTable) -> String {
    let rows: Vec<&RateRow> = table.rates.iter().flatten().collect();
    let mut by_setting: BTreeMap<usize, f64> = BTreeMap::new();
    for r in &rows {
        by_setting.insert(r.setting, r.delta);
    }
    let deltas: Vec<f64> = by_setting.values().copied().collect();
    let power = {
        let mut d = deltas.clone();
        d.sort_by(f64::total_cmp);
        d.dedup();
        d.len() == deltas.len() && d.len() >= 2
    };
    let x_of = |r: &RateRow| if power { r.delta } else { r.setting as f64 };
    let xs: Vec<f64> = rows.iter().map(|r| x_of(r)).collect();
    let (x0, x1) = (xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 1.0, x1 + 1.0) };
    let ymax = if power { 100.0 } else { (rows.iter().map(|r| r.value).fold(0.0, f64::max) * 1.2).max(10.0).ceil() };

    let (w, h, l, r, t, b) = (640.0, 400.0, 60.0, 130.0, 30.0, 50.0);
    let px = |x: f64| l + (x - x0) / (x1 - x0) * (w - l - r);
    let py = |y: f64| h - b - y / ymax * (h - t - b);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<line x1="{l}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#, h - b, w - r, h - b);
    let _ = writeln!(s, r#"<line x1="{l}" y1="{t}" x2="{l}" y2="{:.2}" stroke="black"/>"#, h - b);
    for k in 0..=4 {
        let y = ymax * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, l - 6.0, py(y) + 4.0, fmt_num(y));
    }
    let mut ticks: Vec<f64> = if power { deltas.clone() } else { by_setting.keys().map(|&k| k as f64).collect() };
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for x in &ticks {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, px(*x), h - b + 16.0, fmt_num(*x));
    }
    let xlabel = if power { "delta" } else { "setting" };
    let ylabel = if power { "rejection rate (%)" } else { "empirical size (%)" };
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#, (l + w - r) / 2.0, h - 12.0);
    let _ = writeln!(s, r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{ylabel}</text>"#, (t + h - b) / 2.0, (t + h - b) / 2.0);

    let mut stats: Vec<&str> = Vec::new();
    for r in &rows {
        if !stats.contains(&r.statistic.as_str()) {
            stats.push(&r.statistic);
        }
    }
    for (i, name) in stats.iter().enumerate() {
        let mut pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.statistic == *name).map(|r| (x_of(r), r.value)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"><title>{}</title></polyline>"#, path.join(" "), escape(name));
        let ly = t + 20.0 * i as f64 + 10.0;
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, w - r + 15.0, w - r + 40.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, w - r + 46.0, ly + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
