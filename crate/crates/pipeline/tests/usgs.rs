use exceedmix_pipeline::usgs::{nwis_json_body, parse_nwis_json};
use exceedmix_pipeline::PipelineError;

const FIXTURE: &str = include_str!("fixtures/nwis_09380000.json");
const GOLDEN: &str = include_str!("fixtures/nwis_09380000.golden.csv");

#[test]
fn fixture_matches_golden() {
    let s = parse_nwis_json("09380000", FIXTURE).unwrap();
    assert_eq!(s.to_normalized_csv(), GOLDEN);
    assert_eq!(s.values.iter().filter(|v| v.discharge.is_none()).count(), 2);
}

#[test]
fn regenerated_body_parses_to_the_same_series() {
    let s = parse_nwis_json("09380000", FIXTURE).unwrap();
    let again = parse_nwis_json("09380000", &nwis_json_body(&s)).unwrap();
    assert_eq!(again, s);
}

#[test]
fn malformed_body_names_the_station() {
    for body in [
        "{not json",
        "{\"value\": {}}",
        &FIXTURE.replace("\"00060\"", "\"00065\""),
    ] {
        match parse_nwis_json("09380000", body) {
            Err(e @ PipelineError::Fetch { .. }) => assert!(e.to_string().contains("09380000"), "{e}"),
            other => panic!("expected a fetch error, got {other:?}"),
        }
    }
}
