//! Randomized invariants across the simulator, observation encoder, network and return builder.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crowdnav::geom::{wrap_angle, Vec2};
use crowdnav::net::{forward, Checkpoint, NetConfig, NetParams};
use crowdnav::obs::{build_observation, ObsConfig};
use crowdnav::sim::{
    action_at, generate_random_scenario, reward, step, AgentState, PolicyTag, RewardParams, SimConfig, Status,
    StepParams, ACTION_COUNT,
};
use crowdnav::trainer::{discounted_returns, select_action, Experience, SelectionMode};

fn tiny() -> NetConfig {
    NetConfig {
        lstm_hidden: 4,
        fc_widths: [6, 6],
        ..NetConfig::default()
    }
}

prop_compose! {
    fn arb_agent(id: usize)(
        px in -4.0..4.0f64, py in -4.0..4.0f64,
        gx in -4.0..4.0f64, gy in -4.0..4.0f64,
        vx in -1.5..1.5f64, vy in -1.5..1.5f64,
        heading in -3.1..3.1f64,
        radius in 0.2..0.8f64,
        pref_speed in 0.5..2.0f64,
        frozen in prop::bool::weighted(0.15),
    ) -> AgentState {
        AgentState {
            id,
            position: Vec2::new(px, py),
            velocity: Vec2::new(vx, vy),
            heading,
            radius,
            goal: Vec2::new(gx, gy),
            pref_speed,
            policy: PolicyTag::Learned,
            status: if frozen { Status::Collided } else { Status::Active },
            elapsed: 0.0,
        }
    }
}

fn arb_world(max: usize) -> impl Strategy<Value = Vec<AgentState>> {
    (1..=max).prop_flat_map(|n| (0..n).map(arb_agent).collect::<Vec<_>>())
}

fn transformed(world: &[AgentState], theta: f64, shift: Vec2) -> Vec<AgentState> {
    world
        .iter()
        .map(|a| AgentState {
            position: a.position.rotate(theta) + shift,
            goal: a.goal.rotate(theta) + shift,
            velocity: a.velocity.rotate(theta),
            heading: wrap_angle(a.heading + theta),
            ..a.clone()
        })
        .collect()
}

fn ego_world(world: &[AgentState]) -> Vec<AgentState> {
    let mut w = world.to_vec();
    w[0].status = Status::Active;
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn observation_is_frame_invariant(
        world in arb_world(8),
        theta in -std::f64::consts::PI..std::f64::consts::PI,
        sx in -50.0..50.0f64,
        sy in -50.0..50.0f64,
    ) {
        let world = ego_world(&world);
        let cfg = ObsConfig::default();
        let a = build_observation(&world, 0, &cfg);
        let b = build_observation(&transformed(&world, theta, Vec2::new(sx, sy)), 0, &cfg);
        prop_assert_eq!(a.others.len(), b.others.len());
        for (x, y) in a.ego.to_array().iter().zip(b.ego.to_array()) {
            prop_assert!((x - y).abs() < 1e-9, "ego {} vs {}", x, y);
        }
        for (oa, ob) in a.others.iter().zip(&b.others) {
            for (x, y) in oa.to_array().iter().zip(ob.to_array()) {
                prop_assert!((x - y).abs() < 1e-9, "other {} vs {}", x, y);
            }
        }
    }

    #[test]
    fn observation_sorted_far_to_near_and_capped(world in arb_world(12), cap in 0usize..6) {
        let world = ego_world(&world);
        let cfg = ObsConfig { max_others: cap, ..ObsConfig::default() };
        let obs = build_observation(&world, 0, &cfg);
        let visible = world[1..].iter().filter(|a| a.status == Status::Active).count();
        prop_assert_eq!(obs.others.len(), visible.min(cap));
        prop_assert!(obs.others.windows(2).all(|w| w[0].distance >= w[1].distance));
        // the closest agents survive the cap
        let full = build_observation(&world, 0, &ObsConfig::default());
        prop_assert_eq!(&full.others[full.others.len() - obs.others.len()..], &obs.others[..]);
    }

    #[test]
    fn policy_is_a_distribution_for_any_sequence_length(seed in any::<u64>(), world in arb_world(20)) {
        let params: NetParams<f32> = NetParams::init(tiny(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let world = ego_world(&world);
        let obs = build_observation(&world, 0, &ObsConfig::default());
        let trace = forward(&obs, &params).unwrap();
        prop_assert_eq!(trace.probs.len(), ACTION_COUNT);
        let total: f32 = trace.probs.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-5);
        prop_assert!(trace.probs.iter().all(|p| *p >= 0.0));
        prop_assert!(trace.value.is_finite());
    }

    #[test]
    fn greedy_selection_is_argmax(raw in prop::collection::vec(0.0..1.0f32, ACTION_COUNT)) {
        let total: f32 = raw.iter().sum();
        prop_assume!(total > 0.1);
        let probs: Vec<f32> = raw.iter().map(|p| p / total).collect();
        let picked = select_action(&probs, SelectionMode::Greedy, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let best = probs.iter().cloned().fold(f32::MIN, f32::max);
        prop_assert_eq!(probs[picked], best);
        prop_assert!(probs[..picked].iter().all(|&p| p < best));
    }

    #[test]
    fn sampling_never_picks_zero_mass(hot in 0usize..ACTION_COUNT, seed in any::<u64>()) {
        let mut probs = vec![0.0f32; ACTION_COUNT];
        probs[hot] = 0.5;
        probs[(hot + 3) % ACTION_COUNT] = 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let i = select_action(&probs, SelectionMode::Sample, &mut rng).unwrap();
            prop_assert!(probs[i] > 0.0);
        }
    }

    #[test]
    fn returns_satisfy_the_recursion(
        rewards in prop::collection::vec(-0.25..1.0f64, 1..80),
        values in prop::collection::vec(-1.0..1.0f64, 80),
        terminal in any::<bool>(),
        bootstrap in -1.0..1.0f64,
        gamma in 0.5..1.0f64,
        k in 1usize..40,
    ) {
        let obs = build_observation(&ego_world(&[AgentState {
            id: 0, position: Vec2::ZERO, velocity: Vec2::ZERO, heading: 0.0, radius: 0.5,
            goal: Vec2::new(1.0, 0.0), pref_speed: 1.0, policy: PolicyTag::Learned,
            status: Status::Active, elapsed: 0.0,
        }]), 0, &ObsConfig::default());
        let n = rewards.len();
        let traj: Vec<Experience> = rewards.iter().enumerate().map(|(t, &r)| Experience {
            observation: obs.clone(), action_index: 0, reward: r,
            terminal: terminal && t == n - 1, value: values[t],
            episode_id: 0, agent_id: 0, step_index: t,
        }).collect();
        let out = discounted_returns(&traj, bootstrap, gamma, k).unwrap();
        let tail = if terminal { 0.0 } else { bootstrap };
        prop_assert_eq!(out[n - 1].ret, rewards[n - 1] + gamma * tail);
        for t in 0..n - 1 {
            let next = if (t + 1) % k == 0 { values[t + 1] } else { out[t + 1].ret };
            prop_assert_eq!(out[t].ret, rewards[t] + gamma * next);
            prop_assert_eq!(out[t].advantage, out[t].ret - values[t]);
        }
    }

    #[test]
    fn checkpoint_bytes_round_trip(seed in any::<u64>(), episodes in any::<u64>()) {
        let params: NetParams<f32> = NetParams::init(tiny(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut ckpt = Checkpoint::new(params);
        ckpt.episodes = episodes;
        ckpt.adam.step = seed % 1000;
        let bytes = ckpt.to_bytes();
        let back = Checkpoint::from_bytes(&bytes, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back.to_bytes(), bytes);
        prop_assert_eq!(back.episodes, episodes);
    }

    #[test]
    fn reward_takes_one_of_four_values(world in arb_world(6), reached in any::<bool>()) {
        let params = RewardParams::default();
        let r = reward(&world[0], &world[1..], reached, &params);
        let proximity = r >= params.proximity_offset && r < params.proximity_offset + params.proximity_slope * params.proximity_threshold;
        prop_assert!(r == params.goal_reward || r == params.collision_penalty || r == 0.0 || proximity, "{}", r);
        if reached {
            prop_assert_eq!(r, params.goal_reward);
        }
    }

    #[test]
    fn step_moves_only_active_agents_within_speed(world in arb_world(6), picks in prop::collection::vec(0usize..ACTION_COUNT, 6)) {
        let mut world = world;
        let before = world.clone();
        let actions: Vec<_> = world.iter().zip(&picks).map(|(a, &i)| a.is_active().then(|| action_at(a.pref_speed, i).unwrap())).collect();
        let params = StepParams { dt: 0.2, time_limit: 100.0, arrival_tolerance: 0.1 };
        step(&mut world, &actions, &params).unwrap();
        for (a, b) in before.iter().zip(&world) {
            if a.is_active() {
                prop_assert!(a.position.distance(b.position) <= a.pref_speed * 0.2 + 1e-12);
            } else {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn random_scenarios_are_valid(seed in any::<u64>(), n in 1usize..=4) {
        let sim = SimConfig::default();
        let s = generate_random_scenario(n, 4.0, &mut ChaCha8Rng::seed_from_u64(seed), &sim).unwrap();
        prop_assert!(s.validate().is_ok());
        prop_assert_eq!(s.agents.len(), n);
        for (i, a) in s.agents.iter().enumerate() {
            prop_assert!(a.start.distance(a.goal) >= sim.min_goal_distance);
            for b in &s.agents[i + 1..] {
                prop_assert!(a.start.distance(b.start) - a.radius - b.radius >= sim.start_margin);
            }
        }
    }
}
