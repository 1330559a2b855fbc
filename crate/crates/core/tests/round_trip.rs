mod support;

use nl2sql_core::sql::{parse, serialize};
use proptest::prelude::*;

#[test]
fn corpus_round_trips() {
    let corpus = support::corpus();
    assert!(corpus.len() >= 150);
    for (_, sql) in &corpus {
        let ast = parse(sql).unwrap_or_else(|e| panic!("{sql}: {e}"));
        let printed = serialize(&ast);
        assert_eq!(parse(&printed).as_ref(), Ok(&ast), "{sql}\n{printed}");
        assert_eq!(serialize(&parse(&printed).unwrap()), printed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn random_asts_round_trip(ast in support::ast_gen::query(2)) {
        let printed = serialize(&ast);
        let reparsed = parse(&printed);
        prop_assert_eq!(reparsed.as_ref(), Ok(&ast), "{}", printed);
    }
}
