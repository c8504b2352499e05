#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "pastnoc/router_netlist.hpp"

using namespace pastnoc;

namespace {

struct EpochIn {
  std::optional<Packet> a, b;
  bool rand_bit = false;
};

// Runs the netlist for a sequence of epochs and checks every epoch's decoded
// outputs (and raw pulse counts) against the behavioral reference.
void cross_validate(const RouterConfig& rc, const std::vector<EpochIn>& seq) {
  Netlist net;
  RouterNetlist rn = RouterNetlist::build(net, "r", rc);
  Engine eng(net);
  const SimTime e = rn.epoch();
  for (size_t k = 0; k < seq.size(); ++k) {
    SimTime s = SimTime(k) * e;
    rn.schedule_taps(eng, s);
    if (seq[k].a) rn.inject(eng, s, 0, *seq[k].a);
    if (seq[k].b) rn.inject(eng, s, 1, *seq[k].b);
    if (rc.policy == ArbiterPolicy::RandomizedRR && seq[k].rand_bit)
      rn.inject_rand(eng, s);
  }
  eng.run_all();

  ArbiterState st;
  for (size_t k = 0; k < seq.size(); ++k) {
    SimTime s = SimTime(k) * e;
    bool rb = rc.policy == ArbiterPolicy::RandomizedRR && seq[k].rand_bit;
    RouteResult ref =
        route_epoch(st, rc.policy, rc.thr_slot, seq[k].a, seq[k].b, rb);
    for (Port p : {Port::Top, Port::Bottom}) {
      const std::optional<Packet>& want = p == Port::Top ? ref.top : ref.bottom;
      CAPTURE(k);
      CAPTURE(p == Port::Top ? "top" : "bottom");
      std::vector<SimTime> raw = rn.raw_output(eng, s, p);
      if (want) {
        DecodeResult got = rn.read_output(eng, s, p);
        REQUIRE_MESSAGE(got.ok(), codec_status_name(got.status));
        CHECK(got.packet.dest == want->dest);
        CHECK(got.packet.data == want->data);
        CHECK(raw.size() == 1 + want->data.size());
      } else {
        CHECK(raw.empty());
      }
    }
  }
}

std::optional<Packet> random_packet(std::mt19937& rng,
                                    const RaceLogicConfig& rl) {
  std::uniform_int_distribution<int> dest(0, rl.dest_count);  // 0 = idle
  std::uniform_int_distribution<int> nslots(0, 4);
  std::uniform_int_distribution<int> slot(1, rl.data_slot_count);
  int d = dest(rng);
  if (d == 0) return std::nullopt;
  std::set<int> s;
  int m = nslots(rng);
  while (int(s.size()) < m) s.insert(slot(rng));
  return Packet{d, {s.begin(), s.end()}};
}

std::vector<EpochIn> random_seq(std::uint32_t seed, const RaceLogicConfig& rl,
                                int epochs) {
  std::mt19937 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<EpochIn> seq(epochs);
  for (EpochIn& ep : seq) {
    ep.a = random_packet(rng, rl);
    ep.b = random_packet(rng, rl);
    ep.rand_bit = coin(rng);
  }
  return seq;
}

std::string config_error_field(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("junction counts match the published module breakdown") {
  for (ArbiterPolicy p :
       {ArbiterPolicy::FixedPriority, ArbiterPolicy::RoundRobin}) {
    Netlist net;
    RouterNetlist rn = RouterNetlist::build(net, "r", RouterConfig::reference(p));
    std::map<std::string, int> jj = rn.jj_by_module(net);
    CHECK(jj["conflict_detection"] == 27);
    CHECK(jj["routing_stage1"] == 87);
    CHECK(jj["routing_stage2"] == 91);
    CHECK(jj["crossbar"] == 89);
    CHECK(jj["resettable_la"] == 34);
    CHECK(jj["shift_register"] == 44);
    CHECK(jj["misc"] == 109);
    CHECK(jj.count("randomizer") == 0);
    CHECK(rn.jj_router_total(net) == 481);
  }

  Netlist net;
  RouterNetlist rn = RouterNetlist::build(
      net, "r", RouterConfig::reference(ArbiterPolicy::RandomizedRR));
  std::map<std::string, int> jj = rn.jj_by_module(net);
  CHECK(jj["randomizer"] == 24);
  CHECK(jj["prng_dist"] == 3);
  CHECK(rn.jj_router_total(net) == 505);  // PRNG fan-out costed separately
  CHECK(net.jj_total() == 508);
}

TEST_CASE("static timing audit passes for every policy and geometry") {
  std::vector<RouterConfig> cfgs;
  for (ArbiterPolicy p : {ArbiterPolicy::FixedPriority,
                          ArbiterPolicy::RoundRobin,
                          ArbiterPolicy::RandomizedRR}) {
    cfgs.push_back(RouterConfig::reference(p));
    RouterConfig wide;  // four destination slots, automatic register sizing
    wide.rl.dest_count = 4;
    wide.thr_slot = 2;
    wide.policy = p;
    cfgs.push_back(wide);
  }
  RouterConfig lopsided;
  lopsided.rl.dest_count = 3;
  lopsided.thr_slot = 1;
  cfgs.push_back(lopsided);
  lopsided.thr_slot = 2;
  cfgs.push_back(lopsided);

  for (const RouterConfig& rc : cfgs) {
    Netlist net;
    RouterNetlist rn = RouterNetlist::build(net, "r", rc);
    for (const AuditCheck& c : rn.audit()) {
      CAPTURE(c.name);
      CAPTURE(c.lhs);
      CAPTURE(c.rhs);
      CHECK(c.pass);
    }
  }
}

TEST_CASE("composed path latencies match the published figures") {
  Netlist net;
  RouterNetlist rn = RouterNetlist::build(net, "r", RouterConfig::reference());
  CHECK(rn.sr_delay() == 162);
  CHECK(rn.data_latency() == 200);
  // Control regeneration: published in-to-out of 213 ps, one ps of slack.
  CHECK(std::abs(rn.regen_latency() - 213) <= 1);

  // The audit carries the per-module path delays as exact identities.
  std::map<std::string, std::pair<SimTime, SimTime>> path;
  for (const AuditCheck& c : rn.audit())
    if (c.op == '=') path[c.name] = {c.lhs, c.rhs};
  CHECK(path["delay_conflict_detection"].first == 41);
  CHECK(path["delay_stage1_arm"].first == 50);
  CHECK(path["delay_stage2_readout"].first == 41);
  CHECK(path["delay_crossbar"].first == 34);
  CHECK(path["delay_last_arrival"].first == 29);
}

TEST_CASE("invalid geometry is rejected with the offending field") {
  CHECK(config_error_field([] {
          Netlist net;
          RouterConfig rc = RouterConfig::reference();
          rc.thr_slot = 0;
          RouterNetlist::build(net, "r", rc);
        }) == "router.thr_slot");
  CHECK(config_error_field([] {
          Netlist net;
          RouterConfig rc = RouterConfig::reference();
          rc.thr_slot = 2;  // equals dest_count: nothing routes down
          RouterNetlist::build(net, "r", rc);
        }) == "router.thr_slot");
  CHECK(config_error_field([] {
          Netlist net;
          RouterConfig rc = RouterConfig::reference();
          rc.sr_stages = 9;  // too short to cover the control period
          RouterNetlist::build(net, "r", rc);
        }) == "router.sr_stages");
}

TEST_CASE("conflicting packets alternate winners epoch by epoch") {
  RouterConfig rc = RouterConfig::reference();
  Packet pa{1, {1}};
  Packet pb{1, {2}};

  Netlist net;
  RouterNetlist rn = RouterNetlist::build(net, "r", rc);
  Engine eng(net);
  const SimTime e = rn.epoch();
  for (int k = 0; k < 4; ++k) {
    rn.schedule_taps(eng, k * e);
    rn.inject(eng, k * e, 0, pa);
    rn.inject(eng, k * e, 1, pb);
  }
  eng.run_all();

  for (int k = 0; k < 4; ++k) {
    bool a_wins = k % 2 == 0;  // first conflict grants A, second flips
    DecodeResult top = rn.read_output(eng, k * e, Port::Top);
    DecodeResult bot = rn.read_output(eng, k * e, Port::Bottom);
    REQUIRE(top.ok());
    REQUIRE(bot.ok());
    CHECK(top.packet.data == (a_wins ? pa : pb).data);
    CHECK(bot.packet.data == (a_wins ? pb : pa).data);
    CHECK(top.packet.dest == 1);
    CHECK(bot.packet.dest == 1);
  }

  // Exact pulse schedule of the first two epochs.  The winner's control
  // pulse regenerates 42 ps into the output frame, the deflected one a
  // picosecond later (input skew); payload slots land on their grid.
  CHECK(rn.raw_output(eng, 0, Port::Top) == std::vector<SimTime>{42, 180});
  CHECK(rn.raw_output(eng, 0, Port::Bottom) == std::vector<SimTime>{43, 196});
  CHECK(rn.raw_output(eng, e, Port::Top) == std::vector<SimTime>{43, 196});
  CHECK(rn.raw_output(eng, e, Port::Bottom) == std::vector<SimTime>{42, 180});
}

TEST_CASE("netlist matches the behavioral router on every input combination") {
  // All destination combinations (idle, up, down), from a fresh router and
  // from one whose conflict counter holds odd parity.
  for (ArbiterPolicy p : {ArbiterPolicy::FixedPriority,
                          ArbiterPolicy::RoundRobin,
                          ArbiterPolicy::RandomizedRR}) {
    RouterConfig rc = RouterConfig::reference(p);
    for (int parity = 0; parity < 2; ++parity) {
      for (int da = 0; da <= 2; ++da) {
        for (int db = 0; db <= 2; ++db) {
          for (int rbit = 0; rbit < (p == ArbiterPolicy::RandomizedRR ? 2 : 1);
               ++rbit) {
            std::vector<EpochIn> seq;
            if (parity)
              seq.push_back({Packet{1, {3}}, Packet{1, {7}}, false});
            EpochIn ep;
            if (da) ep.a = Packet{da, {1, 4}};
            if (db) ep.b = Packet{db, {2, 9}};
            ep.rand_bit = rbit != 0;
            seq.push_back(ep);
            CAPTURE(arbiter_policy_name(p));
            CAPTURE(parity);
            CAPTURE(da);
            CAPTURE(db);
            CAPTURE(rbit);
            cross_validate(rc, seq);
          }
        }
      }
    }
  }
}

TEST_CASE("netlist matches the behavioral router over random epoch streams") {
  for (ArbiterPolicy p : {ArbiterPolicy::FixedPriority,
                          ArbiterPolicy::RoundRobin,
                          ArbiterPolicy::RandomizedRR}) {
    RouterConfig rc = RouterConfig::reference(p);
    for (std::uint32_t seed : {11u, 22u, 33u}) {
      CAPTURE(arbiter_policy_name(p));
      CAPTURE(seed);
      cross_validate(rc, random_seq(seed, rc.rl, 200));
    }
  }
}

TEST_CASE("netlist matches the behavioral router on wider geometries") {
  for (int thr : {1, 2, 3}) {
    RouterConfig rc;
    rc.rl.dest_count = 4;
    rc.thr_slot = thr;
    rc.policy = ArbiterPolicy::RoundRobin;
    CAPTURE(thr);
    cross_validate(rc, random_seq(100 + thr, rc.rl, 120));
  }
  RouterConfig rc;
  rc.rl.dest_count = 4;
  rc.thr_slot = 2;
  rc.policy = ArbiterPolicy::RandomizedRR;
  cross_validate(rc, random_seq(7, rc.rl, 120));
}
