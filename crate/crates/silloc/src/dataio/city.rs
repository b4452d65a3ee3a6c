use std::path::Path;

use serde::{Deserialize, Serialize};
use silloc_core::rasterizer::{signed_area2, Bounds};
use silloc_core::{Building, CityModel, Error as CoreError};

use super::{read_file, write_file, DataError, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CityDoc {
    bounds: [f64; 4],
    buildings: Vec<BuildingDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildingDoc {
    footprint: Vec<[f64; 2]>,
    base_z: f64,
    height: f64,
}

/// Parses and validates a city-model document.
///
/// Clockwise footprints are reversed with a warning; everything else that
/// fails validation is rejected with the offending field path.
pub fn parse_city_model(document: &[u8]) -> Result<CityModel> {
    let de = &mut serde_json::Deserializer::from_slice(document);
    let doc: CityDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        DataError::Schema {
            at: if at == "." { "document".into() } else { at },
            msg: e.into_inner().to_string(),
        }
    })?;
    let [xmin, ymin, xmax, ymax] = doc.bounds;
    let bounds = Bounds::new(xmin, ymin, xmax, ymax).map_err(|e| DataError::Schema {
        at: "bounds".into(),
        msg: e.to_string(),
    })?;
    let buildings = doc
        .buildings
        .into_iter()
        .enumerate()
        .map(|(i, b)| {
            let mut footprint = b.footprint;
            if footprint.len() >= 3 && signed_area2(&footprint) < 0.0 {
                log::warn!("buildings[{i}].footprint is clockwise; reversed");
                footprint.reverse();
            }
            Building {
                footprint,
                base_z: b.base_z,
                height: b.height,
            }
        })
        .collect();
    CityModel::new(buildings, bounds).map_err(|e| match e {
        CoreError::InvalidBuilding { index, reason } => DataError::Schema {
            at: format!("buildings[{index}]"),
            msg: reason,
        },
        other => other.into(),
    })
}

pub fn serialize_city_model(model: &CityModel) -> String {
    let b = model.bounds();
    let doc = CityDoc {
        bounds: [b.xmin, b.ymin, b.xmax, b.ymax],
        buildings: model
            .buildings()
            .iter()
            .map(|b| BuildingDoc {
                footprint: b.footprint.clone(),
                base_z: b.base_z,
                height: b.height,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn read_city_model(path: &Path) -> Result<CityModel> {
    parse_city_model(&read_file(path)?)
}

pub fn write_city_model(path: &Path, model: &CityModel) -> Result<()> {
    write_file(path, serialize_city_model(model).as_bytes())
}
