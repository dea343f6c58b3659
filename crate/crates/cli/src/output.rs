//! CSV output mirroring the convergence-table layout: comma separator,
//! `.` decimal, scientific notation with six significant digits, mandatory
//! header. Rates are blank on the first row. Flags (absolute-error
//! fallbacks) appear as leading `#` comment lines, which keeps the files
//! gnuplot-ready.

use trefftz_wave::analysis::ErrorReport;

fn sci(v: f64) -> String {
    format!("{:.5e}", v)
}

fn rate_cell(r: Option<f64>) -> String {
    r.map(|v| format!("{v:.4}")).unwrap_or_default()
}

fn flag_comments(reports: &[ErrorReport]) -> String {
    let mut out = String::new();
    if reports.iter().any(|r| r.v_absolute) {
        out.push_str("# err_v reported as absolute error (exact norm < 1e-14)\n");
    }
    if reports.iter().any(|r| r.sigma_absolute) {
        out.push_str("# err_sigma reported as absolute error (exact norm < 1e-14)\n");
    }
    out
}

/// `level,h,dofs,err_v,rate_v,err_sigma,rate_sigma,err_dg,rate_dg`
pub fn convergence_csv(reports: &[ErrorReport], rates: &[[Option<f64>; 3]]) -> String {
    let mut out = flag_comments(reports);
    out.push_str("level,h,dofs,err_v,rate_v,err_sigma,rate_sigma,err_dg,rate_dg\n");
    for (r, rate) in reports.iter().zip(rates.iter()) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.level,
            sci(r.h),
            r.dofs,
            sci(r.err_v),
            rate_cell(rate[0]),
            sci(r.err_sigma),
            rate_cell(rate[1]),
            sci(r.err_dg),
            rate_cell(rate[2]),
        ));
    }
    out
}

/// `rho,err_v,rho_rate_v,err_sigma,rho_rate_sigma,err_dg,rho_rate_dg`
pub fn rho_sweep_csv(reports: &[ErrorReport], rates: &[[Option<f64>; 3]]) -> String {
    let mut out = flag_comments(reports);
    out.push_str("rho,err_v,rho_rate_v,err_sigma,rho_rate_sigma,err_dg,rho_rate_dg\n");
    for (r, rate) in reports.iter().zip(rates.iter()) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            sci(r.rho),
            sci(r.err_v),
            rate_cell(rate[0]),
            sci(r.err_sigma),
            rate_cell(rate[1]),
            sci(r.err_dg),
            rate_cell(rate[2]),
        ));
    }
    out
}
