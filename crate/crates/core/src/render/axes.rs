use chrono::{Days, NaiveDate};

/// Pixel box of the plotting area inside the canvas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotArea {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl PlotArea {
    pub fn right(&self) -> f64 {
        self.left + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.top + self.height
    }
}

/// Linear date/value to pixel transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axes {
    pub area: PlotArea,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub y_min: f64,
    pub y_max: f64,
}

impl Axes {
    /// `values` must be non-empty; a zero-width value domain is padded by
    /// 5% of its magnitude (or 1 around zero), any other by 5% of its range.
    pub fn new(area: PlotArea, start: NaiveDate, end: NaiveDate, values: &[f64]) -> Axes {
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let (mut y_min, y_max) = if hi > lo {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        } else {
            let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
            (lo - pad, hi + pad)
        };
        if lo >= 0.0 {
            y_min = y_min.max(0.0);
        }
        Axes {
            area,
            start,
            end,
            y_min,
            y_max,
        }
    }

    fn span_days(&self) -> f64 {
        (self.end - self.start).num_days().max(1) as f64
    }

    pub fn x(&self, date: NaiveDate) -> f64 {
        self.x_days((date - self.start).num_days() as f64)
    }

    /// x of a fractional day offset from `start`.
    pub fn x_days(&self, days: f64) -> f64 {
        self.area.left + days / self.span_days() * self.area.width
    }

    /// Pixels per week along x.
    pub fn week_px(&self) -> f64 {
        7.0 / self.span_days() * self.area.width
    }

    pub fn y(&self, value: f64) -> f64 {
        self.area.bottom() - (value - self.y_min) / (self.y_max - self.y_min) * self.area.height
    }

    pub fn value_at(&self, y_px: f64) -> f64 {
        self.y_min + (self.area.bottom() - y_px) / self.area.height * (self.y_max - self.y_min)
    }

    /// Round-number tick values inside the y domain.
    pub fn y_ticks(&self, target: usize) -> Vec<f64> {
        let step = nice_step((self.y_max - self.y_min) / target as f64);
        let first = (self.y_min / step).ceil() as i64;
        let last = (self.y_max / step).floor() as i64;
        (first..=last).map(|i| i as f64 * step).collect()
    }

    /// Weekly dates inside the x domain, aligned on the reference weekday
    /// of `anchor`, thinned so at most `max` remain.
    pub fn x_ticks(&self, anchor: NaiveDate, max: usize) -> Vec<NaiveDate> {
        let offset = (anchor - self.start).num_days().rem_euclid(7) as u64;
        let mut dates = Vec::new();
        let mut d = self.start + Days::new(offset);
        while d <= self.end {
            dates.push(d);
            d = d + Days::new(7);
        }
        let stride = dates.len().div_ceil(max.max(1)).max(1);
        // keep the anchor on a tick
        let anchor_idx = dates.iter().position(|x| *x == anchor).unwrap_or(0);
        dates
            .into_iter()
            .enumerate()
            .filter(|(i, _)| i.abs_diff(anchor_idx) % stride == 0)
            .map(|(_, d)| d)
            .collect()
    }
}

fn nice_step(raw: f64) -> f64 {
    if raw.is_nan() || raw <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

#[cfg(test)]
mod tests {
    use super::*;

    fn area() -> PlotArea {
        PlotArea {
            left: 90.0,
            top: 40.0,
            width: 1160.0,
            height: 520.0,
        }
    }

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn transforms_invert() {
        let a = Axes::new(area(), d("2021-01-02"), d("2021-03-06"), &[100.0, 900.0]);
        for v in [0.0, 123.4, 875.0] {
            assert!((a.value_at(a.y(v)) - v).abs() < 1e-9);
        }
        assert_eq!(a.x(d("2021-01-02")), 90.0);
        assert_eq!(a.x(d("2021-03-06")), 1250.0);
    }

    #[test]
    fn degenerate_domain_is_padded() {
        let a = Axes::new(area(), d("2021-01-02"), d("2021-01-30"), &[200.0, 200.0]);
        assert_eq!((a.y_min, a.y_max), (190.0, 210.0));
        let z = Axes::new(area(), d("2021-01-02"), d("2021-01-30"), &[0.0]);
        assert_eq!((z.y_min, z.y_max), (0.0, 1.0));
    }

    #[test]
    fn ticks_are_round() {
        let a = Axes::new(area(), d("2021-01-02"), d("2021-03-06"), &[0.0, 1000.0]);
        let t = a.y_ticks(6);
        assert_eq!(t[0], 0.0);
        assert!(t.windows(2).all(|w| (w[1] - w[0] - 200.0).abs() < 1e-9));
        let xt = a.x_ticks(d("2021-01-30"), 5);
        assert!(xt.contains(&d("2021-01-30")));
        assert!(xt.len() <= 6);
    }
}
