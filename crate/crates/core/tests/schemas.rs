mod common;

use fairsearch::data::{DatasetSchema, SimilarPopulation};

#[test]
fn shipped_schemas_parse() {
    // (file, feature count, sensitive population size)
    let expected = [
        ("german_credit", 20, 2 * 57),
        ("adult", 11, 71 * 5 * 2),
        ("bank_marketing", 16, 77),
        ("compas", 8, 2 * 71 * 6),
    ];
    for (name, dim, population) in expected {
        let path = common::workspace_root().join(format!("schemas/{name}.json"));
        let schema = DatasetSchema::load(&path).unwrap();
        assert_eq!(schema.feature_dim(), dim, "{name}");
        let p = SimilarPopulation::new(&schema, usize::MAX).unwrap();
        assert_eq!(p.product_size(), population, "{name}");
    }
}

#[test]
fn german_credit_loads() {
    let (schema, data) = common::german();
    assert_eq!(data.len(), 1000);
    assert!(data.iter().all(|d| d.features.len() == schema.feature_dim()));
    assert!(data.iter().all(|d| d.features.iter().all(|x| (0.0..=1.0).contains(x))));
    let good = data.iter().filter(|d| d.label == 1.0).count();
    assert_eq!(good, 700);
    assert_eq!(schema.label().name, "credit_risk");
}
