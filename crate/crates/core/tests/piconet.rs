use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use simbt_core::attacks::{crack_pin, CrackOptions, Pin, ReferenceStandIn};
use simbt_core::baseband::{AfhMap, BdAddr, ClockState, Modulation, PacketType};
use simbt_core::medium::{wifi_block, Emitter, Transmission};
use simbt_core::piconet::*;

fn pair_of_devices(seed: u64) -> (Device, Device) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = BdAddr::new(0, rng.gen(), rng.gen::<u32>() & 0xff_ffff);
    let b = BdAddr::new(0, rng.gen(), rng.gen::<u32>() & 0xff_ffff);
    let ca = ClockState::new(rng.gen::<u32>() & 0x0fff_ffff);
    let cb = ClockState::new(rng.gen::<u32>() & 0x0fff_ffff);
    (
        Device::new(a, ca),
        Device::new(b, cb).with_drift(if seed.is_multiple_of(2) { 20.0 } else { -20.0 }),
    )
}

fn net(seed: u64, traffic: TrafficProfile, afh: Option<AfhPolicy>) -> Piconet {
    let (m, s) = pair_of_devices(seed);
    Piconet::connected(
        m,
        s,
        PiconetConfig {
            traffic,
            afh,
            seed,
            ..PiconetConfig::default()
        },
    )
}

#[test]
fn idle_link_is_poll_null_and_parity_holds() {
    let mut n = net(1, TrafficProfile::idle(), None);
    let mut polls: i32 = 0;
    let mut nulls = 0;
    for _ in 0..100_000 {
        let r = n.step_slot(&[]);
        if r.started {
            let even = r.clock.clock1() == 0;
            assert_eq!(r.transmitter == Some(Role::Master), even, "parity at slot {}", r.slot);
        }
        if let Some(a) = r.completed {
            match a.packet.ptype {
                PacketType::Poll => polls += 1,
                PacketType::Null => nulls += 1,
                other => panic!("unexpected {other:?}"),
            }
        }
    }
    assert!(polls > 2000 && (polls - nulls).abs() <= 1, "{polls} {nulls}");
}

#[test]
fn dh5_holds_channel_for_five_slots() {
    let mut n = net(2, TrafficProfile::audio_basic_rate(), None);
    let mut seen = 0;
    let mut cur: Option<(u8, u64)> = None;
    for _ in 0..20_000 {
        let r = n.step_slot(&[]);
        if r.started {
            cur = r.channel.map(|c| (c, r.slot));
        } else if let (Some(ch), Some((c0, _))) = (r.channel, cur) {
            assert_eq!(ch, c0);
        }
        if let Some(a) = r.completed {
            if a.packet.ptype == PacketType::Dh5 {
                assert_eq!(r.slot - a.start_slot, 4);
                seen += 1;
            }
        }
    }
    assert!(seen > 1000);
}

#[test]
fn slave_clock_error_stays_bounded() {
    let mut n = net(4, TrafficProfile::idle(), None);
    for _ in 0..50_000 {
        let r = n.step_slot(&[]);
        if r.delivered && r.transmitter == Some(Role::Master) {
            assert!(n.slave.sync_error_us.abs() <= DRIFT_BOUND_US);
        }
    }
    // Between polls the drift stays well under the bound too.
    assert!(n.slave.sync_error_us.abs() <= DRIFT_BOUND_US);
}

#[test]
fn stream_is_delivered_completely_in_clean_rf() {
    for (seed, prof) in [
        (5, TrafficProfile::audio_basic_rate()),
        (6, TrafficProfile::audio_mixed_edr(0.65)),
    ] {
        let mut n = net(seed, prof, None);
        for _ in 0..32_000 {
            n.step_slot(&[]);
        }
        let c = n.counters();
        // At most the packet in flight is missing.
        assert!(c.data_generated - c.data_delivered <= 1, "{c:?}");
        assert_eq!(c.retransmissions, 0);
    }
}

#[test]
fn pairing_matching_pins() {
    let mut n = net(7, TrafficProfile::idle(), None);
    let pin = Pin::new("0000").unwrap();
    let s = run_legacy_pairing(&mut n, pin, pin, 20_000).unwrap();
    let sizes: Vec<usize> = s.transcript.packets().map(|p| p.bits()).collect();
    assert_eq!(sizes, vec![128, 128, 128, 128, 32, 128, 32]);
    assert_eq!(s.air.len(), 7);
    let kinds: Vec<u8> = s
        .air
        .iter()
        .map(|a| match a.packet.ptype {
            PacketType::Pairing(k) => k.index(),
            _ => 0,
        })
        .collect();
    assert_eq!(kinds, vec![1, 2, 3, 4, 5, 6, 7]);
    assert_eq!(n.master.link_keys.get(&n.slave.addr), Some(&s.keys.k_ab));
    assert_eq!(n.slave.link_keys.get(&n.master.addr), Some(&s.keys.k_ab));
    // Replaying the captured exchange through the attack gives the same key.
    let r = crack_pin(
        &ReferenceStandIn,
        &s.transcript,
        s.addr_a,
        s.addr_b,
        CrackOptions::up_to(4),
    )
    .unwrap();
    assert_eq!(r.pin, pin);
    assert_eq!(r.k_ab, s.keys.k_ab);
}

#[test]
fn pairing_mismatched_pins_aborts() {
    let mut n = net(8, TrafficProfile::idle(), None);
    let r = run_legacy_pairing(&mut n, Pin::new("1234").unwrap(), Pin::new("4321").unwrap(), 20_000);
    assert_eq!(r.unwrap_err(), PairingError::SresMismatch(5));
    assert!(n.master.link_keys.is_empty());
}

#[test]
fn fixed_pin_device_wins() {
    let (m, s) = pair_of_devices(9);
    let mut n = Piconet::connected(m, s.with_pin(Pin::new("1234").unwrap()), PiconetConfig::default());
    let r = run_legacy_pairing(&mut n, Pin::new("1234").unwrap(), Pin::new("9999").unwrap(), 20_000);
    assert!(r.is_ok());
}

fn wifi_on(block: std::ops::RangeInclusive<u8>) -> Transmission {
    Transmission {
        emitter: Emitter::Wifi,
        channels: block,
        power_dbm: -60,
    }
}

#[test]
fn afh_excludes_interfered_block_and_slave_follows() {
    let mut n = net(10, TrafficProfile::audio_basic_rate(), Some(AfhPolicy::aggressive()));
    let block = wifi_block(6, 20);
    for _ in 0..16_000 {
        n.step_slot(&[wifi_on(block.clone())]);
    }
    let bad = n.master_map().bad_channels();
    for ch in block.clone() {
        assert!(bad.contains(&ch) || n.master_map().is_usable(ch), "{ch}");
    }
    let excluded = block.clone().filter(|c| bad.contains(c)).count();
    assert!(excluded >= block.clone().count() - 1, "{excluded}");
    assert!(bad.iter().all(|c| block.contains(c)));
    assert_eq!(n.master_map(), n.slave_map());
}

#[test]
fn afh_clean_rf_stays_unknown() {
    let mut n = net(11, TrafficProfile::audio_basic_rate(), Some(AfhPolicy::cooperative()));
    for _ in 0..96_000 {
        n.step_slot(&[]);
    }
    assert_eq!(n.master_map(), &AfhMap::all_unknown());
}

#[test]
fn afh_floor_under_wide_interference() {
    let mut n = net(12, TrafficProfile::audio_basic_rate(), Some(AfhPolicy::aggressive()));
    for _ in 0..32_000 {
        n.step_slot(&[wifi_on(0..=69)]);
    }
    assert!(n.master_map().usable_count() >= 20);
    assert!(n.master_map().usable_count() <= 21);
}

#[test]
fn edr_packets_present_in_mixed_stream() {
    let mut n = net(13, TrafficProfile::audio_mixed_edr(0.65), None);
    let mut edr = 0;
    let mut data = 0;
    for _ in 0..40_000 {
        let r = n.step_slot(&[]);
        if let Some(a) = r.completed {
            if a.sender == Role::Master && a.packet.ptype.is_user_data() {
                data += 1;
                edr += (a.packet.modulation == Modulation::Edr) as u32;
            }
        }
    }
    let f = edr as f64 / data as f64;
    assert!((f - 0.65).abs() < 0.05, "{f}");
}

#[test]
fn inquiry_finds_discoverable_only() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (mut inq, a) = pair_of_devices(14);
    let (b, _) = pair_of_devices(15);
    let b = b.non_discoverable();
    let mut devs = vec![a.clone(), b];
    let res = run_inquiry(&mut inq, &mut devs, ScanConfig::default(), 3 * 4096, &mut rng);
    assert_eq!(res.len(), 1);
    assert_eq!(res[0].bd_addr, a.addr);
    let expected_clock = a.clock.add_ticks(res[0].at_tick as u32).clock27();
    assert!(expected_clock.abs_diff(res[0].clock27) <= 2);
}

#[test]
fn inquiry_latency_within_scan_interval() {
    let mut worst = 0;
    for seed in 0..40 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut inq, a) = pair_of_devices(100 + seed);
        let mut devs = vec![a];
        let res = run_inquiry(&mut inq, &mut devs, ScanConfig::default(), 3 * 4096, &mut rng);
        assert_eq!(res.len(), 1, "seed {seed}");
        worst = worst.max(res[0].at_tick);
    }
    // 1.28 s scan interval plus the maximum backoff and one train sweep.
    assert!(worst <= 4096 + 2 * 128 + 64, "{worst}");
}

#[test]
fn page_exact_clock_and_non_discoverable() {
    let (m, s) = pair_of_devices(16);
    let s = s.non_discoverable();
    let offset = s.clock.offset_from(m.clock) as i64;
    let r = run_page(m, s, offset, ScanConfig::default(), PiconetConfig::default()).unwrap();
    assert!(r.response_ticks <= 2 * 4096 + 8);
    assert_eq!(r.piconet.master.role, Role::Master);
}

#[test]
fn page_with_stale_clock() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut lat = Vec::new();
    for seed in 0..100 {
        let (m, s) = pair_of_devices(200 + seed);
        let exact = s.clock.offset_from(m.clock) as i64;
        let err: i64 = rng.gen_range(-4096..=4096);
        let r = run_page(m, s, exact + err, ScanConfig::default(), PiconetConfig::default())
            .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        lat.push(r.response_ticks);
    }
    lat.sort_unstable();
    assert!(lat[99] <= 2 * PAGE_TIMEOUT_SLOTS);
}

#[test]
fn page_not_connectable() {
    let (m, mut s) = pair_of_devices(18);
    s.connectable = false;
    assert_eq!(
        run_page(m, s, 0, ScanConfig::default(), PiconetConfig::default()).unwrap_err(),
        PageError::NotConnectable
    );
}

#[test]
fn snapshot_roundtrip() {
    let mut n = net(19, TrafficProfile::idle(), None);
    for _ in 0..1000 {
        n.step_slot(&[]);
    }
    let s = Snapshot::of(&n);
    let text = s.to_text();
    assert_eq!(Snapshot::parse(&text).unwrap(), s);
    assert!(text.starts_with("simbt-snapshot 1\nslot 1000\n"));
}
