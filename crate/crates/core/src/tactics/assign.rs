use serde::{Deserialize, Serialize};

use super::TacticsError;
use crate::geom::Vec2;
use crate::interception::InterceptSetup;
use crate::motion::predict_robot_arrival_time;

pub const MAX_ROLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum RoleTarget {
    /// Move to a fixed point.
    Point { position: Vec2 },
    /// Win the rolling ball.
    Ball { position: Vec2, velocity: Vec2 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    /// Arrival time, or interception time for the ball.
    #[default]
    Time,
    /// Squared distance to the target's current position.
    SquaredDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// `targets[i]` is the target index given to robot `i`.
    pub targets: Vec<usize>,
    pub costs: Vec<Vec<f64>>,
    pub total: f64,
}

fn cost(
    robot: (Vec2, Vec2),
    target: &RoleTarget,
    setup: &InterceptSetup,
    mode: CostMode,
) -> Result<f64, TacticsError> {
    let (pos, vel) = robot;
    Ok(match (mode, target) {
        (CostMode::Time, RoleTarget::Point { position }) => {
            predict_robot_arrival_time(pos, vel, *position, &setup.limits)
        }
        (CostMode::Time, RoleTarget::Ball { position, velocity }) => {
            setup.intercept(*position, *velocity, pos, vel)?.t_best
        }
        (CostMode::SquaredDistance, RoleTarget::Point { position })
        | (CostMode::SquaredDistance, RoleTarget::Ball { position, .. }) => {
            (*position - pos).norm_squared()
        }
    })
}

/// Minimum-total-cost matching of robots `(position, velocity)` to targets.
pub fn assign_roles(
    robots: &[(Vec2, Vec2)],
    targets: &[RoleTarget],
    setup: &InterceptSetup,
    mode: CostMode,
) -> Result<Assignment, TacticsError> {
    if robots.len() != targets.len() {
        return Err(TacticsError::SizeMismatch {
            robots: robots.len(),
            targets: targets.len(),
        });
    }
    if robots.len() > MAX_ROLES {
        return Err(TacticsError::TooMany {
            max: MAX_ROLES,
            got: robots.len(),
        });
    }
    let costs = robots
        .iter()
        .map(|r| targets.iter().map(|t| cost(*r, t, setup, mode)).collect())
        .collect::<Result<Vec<Vec<f64>>, _>>()?;
    let picks = hungarian(&costs);
    let total = picks.iter().enumerate().map(|(i, &j)| costs[i][j]).sum();
    Ok(Assignment {
        targets: picks,
        costs,
        total,
    })
}

/// Kuhn–Munkres with row/column potentials, O(n³). `cost` must be square.
/// Returns the column chosen for each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    // owner[j]: row (1-based) currently matched to column j; column 0 is a sentinel.
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0; n];
    for j in 1..=n {
        result[owner[j] - 1] = j - 1;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::MotionLimits;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        permutations(cost.len())
            .iter()
            .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    fn point(x: f64, y: f64) -> RoleTarget {
        RoleTarget::Point {
            position: Vec2::new(x, y),
        }
    }

    #[test]
    fn single_pair() {
        let a = assign_roles(
            &[(Vec2::ZERO, Vec2::ZERO)],
            &[point(100.0, 0.0)],
            &InterceptSetup::default(),
            CostMode::Time,
        )
        .unwrap();
        assert_eq!(a.targets, vec![0]);
    }

    #[test]
    fn nearest_pairing_wins() {
        let setup = InterceptSetup {
            limits: MotionLimits::symmetric(3000.0, 3000.0),
            ..Default::default()
        };
        let robots = [(Vec2::ZERO, Vec2::ZERO), (Vec2::new(5000.0, 0.0), Vec2::ZERO)];
        let targets = [point(0.0, 1000.0), point(5000.0, 1000.0)];
        let a = assign_roles(&robots, &targets, &setup, CostMode::Time).unwrap();
        assert_eq!(a.targets, vec![0, 1]);
        let swap = a.costs[0][1] + a.costs[1][0];
        assert!(swap > a.total);
        // identity: two 1000 mm moves; swap: two √(5000²+1000²) mm moves
        let short = predict_robot_arrival_time(Vec2::ZERO, Vec2::ZERO, Vec2::new(0.0, 1000.0), &setup.limits);
        assert!((a.total - 2.0 * short).abs() < 1e-12);
    }

    #[test]
    fn ball_target_uses_interception_time() {
        let setup = InterceptSetup::default();
        let ball = RoleTarget::Ball {
            position: Vec2::new(-2000.0, 0.0),
            velocity: Vec2::new(2000.0, 0.0),
        };
        let robots = [(Vec2::new(-3000.0, 0.0), Vec2::ZERO), (Vec2::new(1000.0, 500.0), Vec2::ZERO)];
        // Equidistant from both robots, so only the ball cost decides.
        let spot = point(-1000.0, 250.0);
        let a = assign_roles(&robots, &[ball, spot], &setup, CostMode::Time).unwrap();
        let expected = setup
            .intercept(Vec2::new(-2000.0, 0.0), Vec2::new(2000.0, 0.0), robots[1].0, Vec2::ZERO)
            .unwrap()
            .t_best;
        assert_eq!(a.costs[1][0], expected);
        // The robot behind the ball is closer but slower to win it.
        assert_eq!(a.targets, vec![1, 0]);
        let legacy = assign_roles(&robots, &[ball, spot], &setup, CostMode::SquaredDistance)
            .unwrap();
        assert_eq!(legacy.targets, vec![0, 1]);
    }

    #[test]
    fn size_errors() {
        let setup = InterceptSetup::default();
        assert!(matches!(
            assign_roles(&[(Vec2::ZERO, Vec2::ZERO)], &[], &setup, CostMode::Time),
            Err(TacticsError::SizeMismatch { robots: 1, targets: 0 })
        ));
        let many = vec![(Vec2::ZERO, Vec2::ZERO); 17];
        let targets = vec![point(0.0, 0.0); 17];
        assert!(matches!(
            assign_roles(&many, &targets, &setup, CostMode::Time),
            Err(TacticsError::TooMany { .. })
        ));
        assert!(assign_roles(&[], &[], &setup, CostMode::Time).unwrap().targets.is_empty());
    }

    #[test]
    fn hungarian_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.random_range(1..=6);
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.random_range(0.0..10.0)).collect())
                .collect();
            let picks = hungarian(&cost);
            let mut seen = picks.clone();
            seen.sort();
            assert_eq!(seen, (0..n).collect::<Vec<_>>());
            let total: f64 = picks.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            assert!((total - brute_force(&cost)).abs() < 1e-9);
        }
    }
}
