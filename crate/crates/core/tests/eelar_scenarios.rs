mod common;

use common::*;
use eelar_core::config::{BsRelay, Protocol as ProtocolId};
use eelar_core::netsim::trace::{TraceEvent, TraceRecord};
use eelar_core::netsim::Entity;
use eelar_core::{PacketKind, ScenarioBuilder, ScenarioConfig};

fn eelar(side: f64, duration: f64) -> ScenarioConfig {
    config(ProtocolId::Eelar, side, duration)
}

fn control(out: &eelar_core::scenario::RunOutput, kind: &str) -> u64 {
    out.report.control_sent.get(kind).copied().unwrap_or(0)
}

fn data_at(records: &[TraceRecord], ev: TraceEvent, node: Entity) -> usize {
    count(records, |r| is_data(r, ev) && r.node == node)
}

#[test]
fn one_beacon_per_period() {
    let c = ScenarioConfig {
        beacon_period_s: 1.0,
        ..eelar(500.0, 10.0)
    };
    let (out, _) = traced(
        ScenarioBuilder::new(c)
            .static_positions(&[p(100.0, 100.0), p(400.0, 400.0), p(100.0, 400.0)])
            .flows(vec![]),
    );
    assert_eq!(control(&out, "BEACON"), 10);
    // joins, then one reply per node per beacon; replies to the beacon at
    // t=10 land after the run ends
    assert_eq!(control(&out, "PosReq"), 3 + 3 * 9);
    assert_eq!(control(&out, "IDRp"), 3);
}

fn two_node_refresh(start: f64) -> eelar_core::scenario::RunOutput {
    let c = ScenarioConfig {
        beacon_period_s: 100.0,
        staleness_s: 2.0,
        unreachable_timeout_s: 50.0,
        ..eelar(500.0, 10.0)
    };
    let builder = ScenarioBuilder::new(c)
        .static_positions(&[p(300.0, 260.0), p(400.0, 270.0)])
        .flows(vec![flow(0, 1, start, 1)]);
    traced(builder).0
}

#[test]
fn stale_destination_costs_exactly_two_extra_control_packets() {
    let fresh = two_node_refresh(1.0);
    let stale = two_node_refresh(5.0);
    assert_eq!(fresh.report.data_delivered, 1);
    assert_eq!(stale.report.data_delivered, 1);
    assert_eq!(control(&fresh, "BEACON"), 0);
    assert_eq!(stale.report.control_total, fresh.report.control_total + 2);
    assert_eq!(control(&stale, "BEACON"), 1);
    assert_eq!(control(&stale, "PosReq"), control(&fresh, "PosReq") + 1);
}

#[test]
fn cross_area_data_goes_through_the_base_station_once() {
    // BS at (250,250): source in sector 1, destination in sector 4
    let pos = [p(400.0, 260.0), p(100.0, 240.0), p(250.0, 400.0)];
    let (out, records) = traced(
        ScenarioBuilder::new(eelar(500.0, 10.0))
            .static_positions(&pos)
            .flows(vec![flow(0, 1, 1.0, 5)]),
    );
    assert_eq!(out.report.data_sent, 5);
    assert_eq!(out.report.data_delivered, 5);
    assert_eq!(data_at(&records, TraceEvent::Tx, Entity::BaseStation), 5);
    assert_eq!(data_at(&records, TraceEvent::Rx, entity(1)), 5);
    // the flagged copies are never heard by a mobile node other than D
    assert_eq!(data_at(&records, TraceEvent::Rx, entity(2)), 0);
    assert_eq!(data_at(&records, TraceEvent::Tx, entity(0)), 5);
    assert!(out.audit.is_consistent());
    assert!(!out.report.control_sent.contains_key("DATA"));
}

#[test]
fn relay_by_area_flood_also_reaches_the_destination() {
    let c = ScenarioConfig {
        bs_relay: BsRelay::FloodDestArea,
        ..eelar(500.0, 10.0)
    };
    let pos = [p(400.0, 260.0), p(100.0, 240.0), p(250.0, 400.0)];
    let (out, records) = traced(
        ScenarioBuilder::new(c)
            .static_positions(&pos)
            .flows(vec![flow(0, 1, 1.0, 5)]),
    );
    assert_eq!(out.report.data_delivered, 5);
    assert_eq!(data_at(&records, TraceEvent::Tx, Entity::BaseStation), 5);
    // node 2 hears the area broadcast but is outside the stamped area
    assert_eq!(data_at(&records, TraceEvent::Tx, entity(2)), 0);
}

#[test]
fn same_area_flow_never_touches_the_base_station() {
    // all three on the vertical ray above the BS at (500,500): sector 2
    let pos = [p(500.0, 520.0), p(500.0, 720.0), p(500.0, 920.0)];
    let (out, records) = traced(
        ScenarioBuilder::new(eelar(1000.0, 10.0))
            .static_positions(&pos)
            .flows(vec![flow(0, 2, 1.0, 5)]),
    );
    assert_eq!(out.report.data_delivered, 5);
    let at_bs = count(&records, |r| {
        r.kind == PacketKind::Data && r.node == Entity::BaseStation
    });
    assert_eq!(at_bs, 0);
    // the middle node relays each packet once
    assert_eq!(data_at(&records, TraceEvent::Tx, entity(1)), 5);
}

#[test]
fn same_area_destination_out_of_reach_is_lost() {
    let pos = [p(500.0, 520.0), p(500.0, 920.0)];
    let (out, _) = traced(
        ScenarioBuilder::new(eelar(1000.0, 10.0))
            .static_positions(&pos)
            .flows(vec![flow(0, 1, 1.0, 5)]),
    );
    assert_eq!(out.report.data_sent, 5);
    assert_eq!(out.report.data_delivered, 0);
    assert!(out.audit.is_consistent());
}

#[test]
fn relays_must_be_closer_than_the_source() {
    // node 1 is in range of both but farther from D than S is
    let pos = [p(500.0, 700.0), p(500.0, 520.0), p(500.0, 940.0)];
    let (out, records) = traced(
        ScenarioBuilder::new(eelar(1000.0, 10.0))
            .static_positions(&pos)
            .flows(vec![flow(0, 2, 1.0, 3)]),
    );
    assert_eq!(out.report.data_delivered, 3);
    assert_eq!(data_at(&records, TraceEvent::Rx, entity(1)), 3);
    assert_eq!(data_at(&records, TraceEvent::Tx, entity(1)), 0);
}

#[test]
fn position_requests_answer_every_beacon_under_motion() {
    let c = ScenarioConfig {
        n_nodes: 20,
        ..eelar(500.0, 20.0)
    };
    let out = eelar_core::scenario::run_scenario_audited(&c).unwrap();
    let beacons = control(&out, "BEACON");
    assert!(beacons >= 20);
    // every node replies to every beacon, plus joins and targeted refreshes
    assert!(control(&out, "PosReq") >= 20 * beacons);
    assert!(out.audit.is_consistent());
}
