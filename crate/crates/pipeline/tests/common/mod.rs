#![allow(dead_code)]

use chrono::Datelike;

use exceedmix::mixture::{simulate_mixture, MixtureParams};
use exceedmix::simulators::SpaceTimeLayout;
use exceedmix_pipeline::preprocess::Projection;
use exceedmix_pipeline::study::StudyConfig;
use exceedmix_pipeline::usgs::{nwis_json_body, DailyValue, StationSeries};

/// Station id, longitude and latitude.
pub type Station = (&'static str, f64, f64);

/// Fills `cfg.cache_dir` with NWIS responses for `stations` whose in-season
/// discharge is `100·(1 + X)²`, `X` the mixture simulated on the projected
/// station layout with one replicate per year. Off-season days carry a
/// smooth filler.
pub fn seed_cache(cfg: &StudyConfig, stations: &[Station], p: &MixtureParams, seed: u64) {
    let pc = &cfg.preprocess;
    let days = pc.season_days().unwrap();
    let years = (pc.end_year - pc.start_year + 1) as usize;
    let proj = Projection::bounding(&stations.iter().map(|s| (s.1, s.2)).collect::<Vec<_>>());
    let sites = stations.iter().map(|s| proj.apply(s.1, s.2)).collect();
    let times = (0..days.len()).map(|k| k as f64 / (days.len() - 1) as f64).collect();
    let layout = SpaceTimeLayout::new(sites, times, years).unwrap();
    let d = simulate_mixture(p, &layout, seed).unwrap();

    let (start, end) = cfg.date_range().unwrap();
    let client = cfg.client(true);
    std::fs::create_dir_all(cfg.cache_dir.as_ref().unwrap()).unwrap();
    for (s, (id, lon, lat)) in stations.iter().enumerate() {
        let values = start
            .iter_days()
            .take_while(|x| *x <= end)
            .map(|date| {
                let r = (date.year() - pc.start_year) as usize;
                let q = match days.iter().position(|&md| md == (date.month(), date.day())) {
                    Some(t) => 100.0 * (1.0 + d.get(r, s, t)).powi(2),
                    None => 50.0 + (date.ordinal() % 7) as f64,
                };
                DailyValue {
                    date,
                    discharge: Some(q),
                }
            })
            .collect();
        let series = StationSeries {
            id: id.to_string(),
            name: format!("TEST {id}"),
            longitude: *lon,
            latitude: *lat,
            values,
        };
        let url = client.request_url(id, start, end);
        std::fs::write(client.cache_path(&url).unwrap(), nwis_json_body(&series)).unwrap();
    }
}
