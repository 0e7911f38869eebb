//! Analytic tasks over a chart table: a closed planner over a few audited
//! primitives (filter, sort, fold).

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::chart::{DataTable, Value};

/// Plateau threshold for trend segmentation.
pub const FLAT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Min,
    Max,
    Mean,
    Sum,
    Count,
    RangeDescribe,
    Trend,
    ComparePoints,
    ValueAt,
}

impl Task {
    pub const ALL: [Task; 9] = [
        Task::Min,
        Task::Max,
        Task::Mean,
        Task::Sum,
        Task::Count,
        Task::RangeDescribe,
        Task::Trend,
        Task::ComparePoints,
        Task::ValueAt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Min => "min",
            Task::Max => "max",
            Task::Mean => "mean",
            Task::Sum => "sum",
            Task::Count => "count",
            Task::RangeDescribe => "range_describe",
            Task::Trend => "trend",
            Task::ComparePoints => "compare_points",
            Task::ValueAt => "value_at",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    /// How many explicit points the task needs, if any.
    pub fn points_needed(self) -> usize {
        match self {
            Task::ComparePoints => 2,
            Task::ValueAt => 1,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalcError {
    #[error("no data in the selected range")]
    EmptyRange,
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("{task} needs {need} point(s), got {got}")]
    MissingPoints {
        task: &'static str,
        need: usize,
        got: usize,
    },
    #[error("no data point at {0}")]
    PointNotFound(String),
}

/// One row reduced to what the tasks need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: Value,
    pub y: f64,
    pub series: Option<String>,
    pub row: usize,
}

/// Which rows a task sees.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scope {
    /// Inclusive x range; endpoints may come in either order.
    pub range: Option<(Value, Value)>,
    pub series: Option<String>,
    /// Explicit x positions for point tasks, in reference order.
    pub points: Vec<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Decline,
    Plateau,
    Rise,
}

/// A maximal run of first differences sharing one sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub direction: Direction,
    pub start: Point,
    pub end: Point,
    /// Number of steps (first differences) in the run.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum AnalyticResult {
    Min {
        value: f64,
        at: Vec<Point>,
    },
    Max {
        value: f64,
        at: Vec<Point>,
    },
    Mean {
        value: f64,
        n: usize,
    },
    Sum {
        value: f64,
        n: usize,
    },
    Count {
        n: usize,
        first: Point,
        last: Point,
    },
    RangeDescribe {
        min: f64,
        max: f64,
        q1: f64,
        median: f64,
        q3: f64,
        start: Point,
        end: Point,
        n: usize,
    },
    Trend {
        start: Point,
        end: Point,
        segments: Vec<Segment>,
    },
    ComparePoints {
        a: Point,
        b: Point,
        diff: f64,
    },
    ValueAt {
        point: Point,
    },
}

impl AnalyticResult {
    pub fn task(&self) -> Task {
        match self {
            AnalyticResult::Min { .. } => Task::Min,
            AnalyticResult::Max { .. } => Task::Max,
            AnalyticResult::Mean { .. } => Task::Mean,
            AnalyticResult::Sum { .. } => Task::Sum,
            AnalyticResult::Count { .. } => Task::Count,
            AnalyticResult::RangeDescribe { .. } => Task::RangeDescribe,
            AnalyticResult::Trend { .. } => Task::Trend,
            AnalyticResult::ComparePoints { .. } => Task::ComparePoints,
            AnalyticResult::ValueAt { .. } => Task::ValueAt,
        }
    }

    /// The single number a model would cite for this result, if there is one.
    pub fn headline(&self) -> Option<f64> {
        match self {
            AnalyticResult::Min { value, .. }
            | AnalyticResult::Max { value, .. }
            | AnalyticResult::Mean { value, .. }
            | AnalyticResult::Sum { value, .. } => Some(*value),
            AnalyticResult::Count { n, .. } => Some(*n as f64),
            AnalyticResult::ComparePoints { diff, .. } => Some(*diff),
            AnalyticResult::ValueAt { point } => Some(point.y),
            AnalyticResult::RangeDescribe { .. } | AnalyticResult::Trend { .. } => None,
        }
    }

    /// Points the answer talks about, for highlighting.
    pub fn referenced(&self) -> Vec<&Point> {
        match self {
            AnalyticResult::Min { at, .. } | AnalyticResult::Max { at, .. } => at.iter().collect(),
            AnalyticResult::Mean { .. } | AnalyticResult::Sum { .. } => Vec::new(),
            AnalyticResult::Count { first, last, .. } => vec![first, last],
            AnalyticResult::RangeDescribe { start, end, .. } => vec![start, end],
            AnalyticResult::Trend { segments, start, end } => {
                let mut v = vec![start];
                v.extend(segments.iter().map(|s| &s.end));
                v.dedup_by(|a, b| a.row == b.row);
                if v.len() == 1 && end.row != start.row {
                    v.push(end);
                }
                v
            }
            AnalyticResult::ComparePoints { a, b, .. } => vec![a, b],
            AnalyticResult::ValueAt { point } => vec![point],
        }
    }
}

/// Rows with a numeric y, in scope, sorted by x (stable on row order).
pub fn scoped_points(
    table: &DataTable,
    x_field: &str,
    y_field: &str,
    series_field: Option<&str>,
    scope: &Scope,
) -> Result<Vec<Point>, CalcError> {
    let xi = table
        .column_index(x_field)
        .ok_or_else(|| CalcError::UnknownColumn(x_field.into()))?;
    let yi = table
        .column_index(y_field)
        .ok_or_else(|| CalcError::UnknownColumn(y_field.into()))?;
    let si = match series_field {
        Some(f) => Some(
            table
                .column_index(f)
                .ok_or_else(|| CalcError::UnknownColumn(f.into()))?,
        ),
        None => None,
    };
    let range = scope.range.as_ref().map(|(a, b)| match a.total_cmp(b) {
        Ordering::Greater => (b, a),
        _ => (a, b),
    });
    let mut pts: Vec<Point> = table
        .rows()
        .iter()
        .enumerate()
        .filter_map(|(row, r)| {
            let y = r[yi].as_f64()?;
            let series = si.map(|i| r[i].label(0));
            if scope.series.is_some() && series != scope.series {
                return None;
            }
            let x = &r[xi];
            if x.is_null() {
                return None;
            }
            if let Some((lo, hi)) = range {
                if x.total_cmp(lo) == Ordering::Less || x.total_cmp(hi) == Ordering::Greater {
                    return None;
                }
            }
            Some(Point {
                x: x.clone(),
                y,
                series,
                row,
            })
        })
        .collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(pts)
}

/// Linear-interpolated quantile of sorted values.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn direction(d: f64) -> Direction {
    if d.abs() < FLAT_EPS {
        Direction::Plateau
    } else if d > 0.0 {
        Direction::Rise
    } else {
        Direction::Decline
    }
}

/// Maximal runs of equal first-difference sign over `pts` (x-sorted).
pub fn segments(pts: &[Point]) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for w in pts.windows(2) {
        let dir = direction(w[1].y - w[0].y);
        match out.last_mut() {
            Some(s) if s.direction == dir => {
                s.end = w[1].clone();
                s.steps += 1;
            }
            _ => out.push(Segment {
                direction: dir,
                start: w[0].clone(),
                end: w[1].clone(),
                steps: 1,
            }),
        }
    }
    out
}

fn find_point<'a>(pts: &'a [Point], x: &Value) -> Result<&'a Point, CalcError> {
    pts.iter()
        .find(|p| p.x.total_cmp(x) == Ordering::Equal)
        .ok_or_else(|| CalcError::PointNotFound(x.label(2)))
}

/// Run `task` over the rows of `table` in `scope`.
pub fn calculate(
    task: Task,
    table: &DataTable,
    x_field: &str,
    y_field: &str,
    series_field: Option<&str>,
    scope: &Scope,
) -> Result<AnalyticResult, CalcError> {
    let need = task.points_needed();
    if need > 0 {
        if scope.points.len() < need {
            return Err(CalcError::MissingPoints {
                task: task.as_str(),
                need,
                got: scope.points.len(),
            });
        }
        // Point lookups ignore the range: the points are the referents.
        let all = Scope {
            range: None,
            series: scope.series.clone(),
            points: Vec::new(),
        };
        let pts = scoped_points(table, x_field, y_field, series_field, &all)?;
        return Ok(match task {
            Task::ValueAt => AnalyticResult::ValueAt {
                point: find_point(&pts, &scope.points[0])?.clone(),
            },
            _ => {
                let mut a = find_point(&pts, &scope.points[0])?.clone();
                let mut b = find_point(&pts, &scope.points[1])?.clone();
                if a.x.total_cmp(&b.x) == Ordering::Greater {
                    std::mem::swap(&mut a, &mut b);
                }
                let diff = b.y - a.y;
                AnalyticResult::ComparePoints { a, b, diff }
            }
        });
    }

    let pts = scoped_points(table, x_field, y_field, series_field, scope)?;
    if pts.is_empty() {
        return Err(CalcError::EmptyRange);
    }
    let first = pts[0].clone();
    let last = pts[pts.len() - 1].clone();
    let n = pts.len();
    Ok(match task {
        Task::Min | Task::Max => {
            let pick = |a: f64, b: f64| if task == Task::Min { a.min(b) } else { a.max(b) };
            let value = pts.iter().map(|p| p.y).reduce(pick).unwrap_or(f64::NAN);
            let at: Vec<Point> = pts.iter().filter(|p| p.y == value).cloned().collect();
            if task == Task::Min {
                AnalyticResult::Min { value, at }
            } else {
                AnalyticResult::Max { value, at }
            }
        }
        Task::Mean => AnalyticResult::Mean {
            value: pts.iter().map(|p| p.y).sum::<f64>() / n as f64,
            n,
        },
        Task::Sum => AnalyticResult::Sum {
            value: pts.iter().map(|p| p.y).sum(),
            n,
        },
        Task::Count => AnalyticResult::Count { n, first, last },
        Task::RangeDescribe => {
            let mut ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
            ys.sort_by(f64::total_cmp);
            AnalyticResult::RangeDescribe {
                min: ys[0],
                max: ys[n - 1],
                q1: quantile(&ys, 0.25),
                median: quantile(&ys, 0.5),
                q3: quantile(&ys, 0.75),
                start: first,
                end: last,
                n,
            }
        }
        Task::Trend => AnalyticResult::Trend {
            segments: segments(&pts),
            start: first,
            end: last,
        },
        Task::ComparePoints | Task::ValueAt => unreachable!("point tasks return above"),
    })
}
