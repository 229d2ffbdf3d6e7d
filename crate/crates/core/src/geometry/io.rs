use std::io::BufRead;

use num_traits::Float;
use serde_json::Value;

use super::{GeometryError, ZonePolygon, ZoneSet};

/// Reads `zone_id;x1,y1;x2,y2;...` lines. Blank lines and lines starting
/// with `#` are skipped; a closing corner equal to the first is dropped.
pub fn read_zone_text<T: Float, R: BufRead>(input: R) -> Result<ZoneSet<T>, GeometryError> {
    let mut zones = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| GeometryError::Parse { line: line_no, message };
        let mut parts = trimmed.split(';');
        let id = parts.next().unwrap_or_default().trim();
        if id.is_empty() {
            return Err(parse_err("missing zone id".into()));
        }
        let mut corners = Vec::new();
        for part in parts {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (x, y) = part
                .split_once(',')
                .ok_or_else(|| parse_err(format!("corner {part:?} is not x,y")))?;
            let coord = |s: &str| -> Result<T, GeometryError> {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .and_then(T::from)
                    .ok_or_else(|| parse_err(format!("bad coordinate {s:?}")))
            };
            corners.push((coord(x)?, coord(y)?));
        }
        drop_closing_corner(&mut corners);
        zones.push(ZonePolygon::new(id, corners).map_err(|e| parse_err(e.to_string()))?);
    }
    ZoneSet::new(zones)
}

/// Reads a GeoJSON `FeatureCollection` of `Polygon` features. The zone id
/// comes from `properties[id_key]` (string or number), falling back to the
/// feature's own `id`. Only the outer ring is used.
pub fn read_geojson<T: Float, R: std::io::Read>(input: R, id_key: &str) -> Result<ZoneSet<T>, GeometryError> {
    let doc: Value = serde_json::from_reader(input)?;
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or(GeometryError::Feature {
            index: 0,
            message: "expected a FeatureCollection with a features array".into(),
        })?;

    let mut zones = Vec::with_capacity(features.len());
    for (index, feature) in features.iter().enumerate() {
        let err = |message: &str| GeometryError::Feature {
            index,
            message: message.to_string(),
        };
        let id = feature
            .get("properties")
            .and_then(|p| p.get(id_key))
            .or_else(|| feature.get("id"))
            .and_then(|v| match v {
                Value::String(s) => Some(s.clone()),
                Value::Number(n) => Some(n.to_string()),
                _ => None,
            })
            .ok_or_else(|| err("missing zone id"))?;
        let geometry = feature.get("geometry").ok_or_else(|| err("missing geometry"))?;
        if geometry.get("type").and_then(Value::as_str) != Some("Polygon") {
            return Err(err("geometry must be a Polygon"));
        }
        let ring = geometry
            .get("coordinates")
            .and_then(|c| c.get(0))
            .and_then(Value::as_array)
            .ok_or_else(|| err("polygon has no outer ring"))?;
        let mut corners = Vec::with_capacity(ring.len());
        for point in ring {
            let xy = point
                .as_array()
                .filter(|p| p.len() >= 2)
                .and_then(|p| Some((p[0].as_f64()?, p[1].as_f64()?)))
                .ok_or_else(|| err("corner is not a coordinate pair"))?;
            corners.push((T::from(xy.0).unwrap(), T::from(xy.1).unwrap()));
        }
        drop_closing_corner(&mut corners);
        zones.push(ZonePolygon::new(id, corners)?);
    }
    ZoneSet::new(zones)
}

fn drop_closing_corner<T: Float>(corners: &mut Vec<(T, T)>) {
    if corners.len() > 1 && corners.first() == corners.last() {
        corners.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_format() {
        let text = "# zones\nA;0,0;1,0;1,1;0,1;0,0\n\nB; 1,0 ; 2,0; 2,1\n";
        let zs: ZoneSet<f64> = read_zone_text(text.as_bytes()).unwrap();
        assert_eq!(zs.ids(), vec!["A", "B"]);
        assert_eq!(zs.zones()[0].corners().len(), 4);
        assert_eq!(zs.zones()[1].corners()[2], (2.0, 1.0));
    }

    #[test]
    fn text_errors_carry_line_numbers() {
        let err = read_zone_text::<f64, _>("A;0,0;1,0;1,1\nB;0,0;x,1;2,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, GeometryError::Parse { line: 2, .. }));
        let err = read_zone_text::<f64, _>("A;0,0;1,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, GeometryError::Parse { line: 1, .. }));
    }

    #[test]
    fn geojson_polygons() {
        let doc = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"id":"north"},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}},
            {"type":"Feature","id":7,"properties":{},
             "geometry":{"type":"Polygon","coordinates":[[[1,0],[2,0],[2,1],[1,0]]]}}
        ]}"#;
        let zs: ZoneSet<f64> = read_geojson(doc.as_bytes(), "id").unwrap();
        assert_eq!(zs.ids(), vec!["north", "7"]);
        assert_eq!(zs.zones()[1].corners(), &[(1.0, 0.0), (2.0, 0.0), (2.0, 1.0)]);
    }

    #[test]
    fn geojson_rejects_other_geometries() {
        let doc = r#"{"features":[{"properties":{"id":"a"},"geometry":{"type":"Point","coordinates":[0,0]}}]}"#;
        assert!(matches!(
            read_geojson::<f64, _>(doc.as_bytes(), "id"),
            Err(GeometryError::Feature { index: 0, .. })
        ));
    }
}
