#![no_main]

use libfuzzer_sys::fuzz_target;
use nussbaum_pi::expr::parse_gain_expr;

fuzz_target!(|data: &str| {
    if let Ok(p) = parse_gain_expr(data) {
        // a parsed expression renders back to something that parses the same
        let again = parse_gain_expr(&p.render()).expect("rendered expression must parse");
        assert_eq!(again.coeffs.len(), p.coeffs.len());
        let _ = p.eval(1.5);
    }
});
