use cofj::classtable::Program;
use cofj::fj::eval_fj;
use cofj::op::{run, OpConfig};
use cofj::{parse_expr, OpenValue};

const SRC: &str = "
    class L extends Object { }
    class N extends L { int h; L t; }
    class F extends Object {
      L build(int n) { if (n == 0) new L() else new N(n, this.build(n - 1)) }
    }";

#[test]
fn long_finite_lists_survive_the_default_test_stack() {
    let p = Program::load(SRC).unwrap();
    let e = parse_expr("new F().build(100000)").unwrap();
    let v = eval_fj(&p.table, &e, 10_000_000).unwrap();
    let cfg = OpConfig {
        fuel: 50_000_000,
        ..OpConfig::default()
    };
    let c = run(&p.table, &e, &cfg).result.unwrap();
    assert!(c.env.is_empty());
    let text = c.open.to_string();
    assert_eq!(text, OpenValue::from(&v).to_string());
    assert!(text.starts_with("new N(100000, new N(99999, "));
    assert_eq!(text.matches("new N(").count(), 100000);
}
