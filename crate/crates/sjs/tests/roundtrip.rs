//! Printing and reparsing stability of the surface syntax.

use proptest::prelude::*;

use sjs::fuzz::gen_program;
use sjs::surface::{parse, SourceProgram};

proptest! {
    /// Pretty-printing a core term and parsing it back is the identity
    /// (modulo spans).
    #[test]
    fn print_parse_is_identity(seed in any::<u64>(), budget in 0u32..40) {
        let e = gen_program(seed, budget);
        let text = e.pretty();
        let reparsed = parse(&SourceProgram::new(text.clone(), "gen.sjs"))
            .unwrap_or_else(|err| panic!("unparseable output {err}:\n{text}"));
        prop_assert_eq!(reparsed.strip_spans(), e.strip_spans());
    }

    /// parse . pretty . parse is a fixed point on ASTs.
    #[test]
    fn parse_pretty_parse_fixed_point(seed in any::<u64>(), budget in 0u32..40) {
        let e = gen_program(seed, budget);
        let once = parse(&SourceProgram::new(e.pretty(), "gen.sjs")).unwrap();
        let twice = parse(&SourceProgram::new(once.pretty(), "gen.sjs")).unwrap();
        prop_assert_eq!(once.strip_spans(), twice.strip_spans());
    }
}

#[test]
fn golden_sources_round_trip() {
    for text in [
        "var v1 = { d : 1, m : function (x) { this.a = x + this.d } };\n\
         var v2 = { a : 2 } proto v1;\n\
         v2.m(3)",
        "({a: 3} proto {}).b",
        "({m: function () { this.f = 3 }}).m()",
        "function f(x) { var y = x; y = 2; return x.a + 1 }; f",
        "var v4 = 1 ? null : { d : 2 }; v4",
        "\"string\" ; 0",
    ] {
        let first = parse(&SourceProgram::new(text, "g.sjs")).unwrap();
        let second = parse(&SourceProgram::new(first.pretty(), "g.sjs")).unwrap();
        assert_eq!(first.strip_spans(), second.strip_spans(), "source: {text}");
    }
}
