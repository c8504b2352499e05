/*
 * Copyright 2026 The pastnoc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pastnoc/router_netlist.hpp"

#include <algorithm>
#include <stdexcept>

namespace pastnoc {

namespace {

// Shorthand for the module names used in the area breakdown.
constexpr const char* kMisc = "misc";
constexpr const char* kSr = "shift_register";
constexpr const char* kCd = "conflict_detection";
constexpr const char* kS1 = "routing_stage1";
constexpr const char* kS2 = "routing_stage2";
constexpr const char* kXb = "crossbar";
constexpr const char* kLa = "resettable_la";
constexpr const char* kRnd = "randomizer";
constexpr const char* kPrng = "prng_dist";

// Composed path offsets relative to the shift-register output ("Xm time").
// Builder and audit both use these; keep them in sync with the wiring.
struct Paths {
  explicit Paths(const RouterDelays& d)
      : clk(d.xm_split + d.gate_out + d.xm_split + d.xm_split),
        raw(clk + d.gate_out + d.stage2_read),
        xset(raw + d.s_sig + d.m_union + d.s_set),
        gate_set(raw + d.s_sig + d.m_regen + d.s_regen_tap),
        regen(raw + d.s_sig + d.m_regen + d.s_regen_tap + d.m_ctl + d.m_out),
        la_clk(d.xm_split + d.gate_out + d.xm_split + d.s_rla + d.la_read +
               d.m_la + d.s_la),
        ghost(la_clk + d.gate_out + d.m_ctl + d.m_out),
        data(d.xm_split + d.gate_out + d.xm_split + d.xbar_ndro + d.m_xbar +
             d.m_out) {}
  SimTime clk;       // Xm -> selection-gate clock (gLA/gRA/...)
  SimTime raw;       // Xm -> stage-2 register output (S signal)
  SimTime xset;      // Xm -> crossbar switch set
  SimTime gate_set;  // Xm -> last-arrival gate set (via regen union tap)
  SimTime regen;     // Xm -> regenerated control pulse on the output
  SimTime la_clk;    // later Xm -> last-arrival gate clock
  SimTime ghost;     // later Xm -> gate output on the output merger
  SimTime data;      // Xm -> data pulse on the output
};

}  // namespace

SimTime RouterNetlist::sr_delay() const {
  int stages = cfg.sr_stages;
  return SimTime(stages) * 15 + cfg.d.sr_io;
}

SimTime RouterNetlist::data_latency() const {
  return cfg.d.fe_split + sr_delay() + Paths(cfg.d).data;
}

SimTime RouterNetlist::regen_latency() const {
  return cfg.d.fe_split + sr_delay() + Paths(cfg.d).regen;
}

RouterNetlist RouterNetlist::build(Netlist& net, const std::string& prefix,
                                   const RouterConfig& rc,
                                   WireId ext_a, WireId ext_b) {
  const RouterDelays& d = rc.d;
  const SimTime cp = rc.rl.control_period();
  const int stages = rc.effective_sr_stages();

  if (rc.rl.dest_count < 2)
    throw ConfigError("router.dest_count", "need at least 2 destinations");
  if (rc.thr_slot < 1 || rc.thr_slot >= rc.rl.dest_count)
    throw ConfigError("router.thr_slot",
                      "threshold slot must lie in [1, dest_count-1]");
  const SimTime fesr = d.fe_split + SimTime(stages) * 15 + d.sr_io;
  // The register must hold the packet long enough that the epoch-relative
  // control taps finish arming stage 1 before the first delayed readout.
  if (fesr + 37 <= cp + 14)
    throw ConfigError("router.sr_stages",
                      "shift register too short for the control period");

  RouterNetlist rn;
  rn.prefix = prefix;
  rn.cfg = Cfg{rc.rl, rc.thr_slot, stages, rc.policy, d, rc.rl.epoch()};

  auto W = [&](const std::string& n) { return net.wire(prefix + "." + n); };
  auto N = [&](const std::string& n) { return prefix + "." + n; };

  // ---- primary inputs and periodic taps ------------------------------
  rn.in_a = ext_a != kNoWire ? ext_a : W("inA");
  rn.in_b = ext_b != kNoWire ? ext_b : W("inB");
  rn.e1 = W("e1");
  rn.thr = W("thr");
  rn.e2 = W("e2");
  rn.e3s1 = W("e3s1");
  rn.e4g = W("e4g");
  for (int i = 0; i < 12; ++i) rn.e3x.push_back(W("e3x" + std::to_string(i)));

  const int c0 = net.cell_count();

  // ---- front end ------------------------------------------------------
  auto fe_a = net.splitter(N("S_feA"), kMisc, rn.in_a, d.fe_split, d.fe_split);
  WireId in_b2 = net.jtl(N("JTL_skewB"), kMisc, rn.in_b, d.skew_b);
  auto fe_b = net.splitter(N("S_feB"), kMisc, in_b2, d.fe_split, d.fe_split);

  CellId sr_a = net.add(CellKind::ShiftRegister, N("SR_A"), kSr);
  net.cell(sr_a).sr_stages = stages;
  net.cell(sr_a).sr_io_delay = d.sr_io;
  net.cell(sr_a).jj = jj_count_of(CellKind::ShiftRegister, stages);
  net.feed(fe_a[0], sr_a, 0);
  WireId xm_a = W("XmA");
  net.drive(sr_a, 0, xm_a, 0);

  CellId sr_b = net.add(CellKind::ShiftRegister, N("SR_B"), kSr);
  net.cell(sr_b).sr_stages = stages;
  net.cell(sr_b).sr_io_delay = d.sr_io;
  net.cell(sr_b).jj = jj_count_of(CellKind::ShiftRegister, stages);
  net.feed(fe_b[0], sr_b, 0);
  WireId xm_b = W("XmB");
  net.drive(sr_b, 0, xm_b, 0);

  // Epoch-start distribution with an observability tap.
  auto e1p = net.splitter(N("S_e1p"), kMisc, rn.e1, d.probe_jtl, d.probe_jtl);
  rn.probe_e1 = net.jtl(N("JTL_e1p"), kMisc, e1p[0], d.probe_jtl);
  net.wire_at(rn.probe_e1).name = prefix + ".probe_e1";
  auto e1a = net.splitter(N("S_e1a"), kMisc, e1p[1], d.s_e1, d.s_e1);
  auto e1b = net.splitter(N("S_e1b"), kMisc, e1a[0], d.s_e1, d.s_e1);
  auto e1s1 = net.splitter(N("S_e1s1"), kMisc, e1a[1], d.s_e1, d.s_e1);

  // First-pulse extractors: armed by the epoch tap, popped by the first
  // pulse of the packet; later pulses find them empty.
  CellId fd_a = net.add(CellKind::DFF, N("FD_A"), kMisc);
  net.feed(e1b[0], fd_a, 0);
  net.feed(fe_a[1], fd_a, 1);
  WireId cd_a = W("cdA");
  net.drive(fd_a, 0, cd_a, d.fd_read);

  CellId fd_b = net.add(CellKind::DFF, N("FD_B"), kMisc);
  net.feed(e1b[1], fd_b, 0);
  net.feed(fe_b[1], fd_b, 1);
  WireId cd_b = W("cdB");
  net.drive(fd_b, 0, cd_b, d.fd_read);

  // ---- conflict detection ---------------------------------------------
  // The threshold tap pulses twice per epoch; a TFF separates the two.
  CellId tff_thr = net.add(CellKind::TFF, N("TFF_thr"), kS1);
  net.feed(rn.thr, tff_thr, 0);
  WireId thr1 = W("thr1");
  WireId thr2 = W("thr2");
  net.drive(tff_thr, 0, thr1, d.tff_thr);
  net.drive(tff_thr, 1, thr2, d.tff_thr);

  WireId cd_clk = net.merger(N("M_clkCD"), kCd, thr1, rn.e2, d.m_clk_cd);
  CellId and_cd = net.add(CellKind::AndClocked, N("AND_cd"), kCd);
  net.feed(cd_a, and_cd, 0);
  net.feed(cd_b, and_cd, 1);
  net.feed(cd_clk, and_cd, 2);
  WireId and_out = W("and_out");
  net.drive(and_cd, 0, and_out, d.and_cd);

  CellId tff_cd = net.add(CellKind::TFF, N("TFF_cd"), kCd);
  net.cell(tff_cd).jj = jj_count_of(CellKind::TFF, 0, 1);  // odd output unused
  WireId c1_raw = W("c1_raw");
  net.drive(tff_cd, 1, c1_raw, d.tff_cd);

  WireId c_in = kNoWire;  // wire entering the C distribution tree
  if (rc.policy == ArbiterPolicy::RandomizedRR) {
    rn.rnd_raw = W("rnd_raw");
    rn.e1_rnd = W("e1_rnd");
    rn.e2d = W("e2d");
    // The PRNG bit for epoch k is latched during epoch k-1 and read out
    // just after the epoch starts; it advances the conflict counter and
    // suppresses this epoch's flip pulse.
    CellId dff_rnd = net.add(CellKind::DFF2, N("DFF2_rnd"), kRnd);
    net.feed(rn.rnd_raw, dff_rnd, 0);
    net.feed(rn.e1_rnd, dff_rnd, 1);
    WireId rnd = W("rnd");
    net.drive(dff_rnd, 0, rnd, d.rnd_read);
    auto rnd_fan = net.splitter(N("S_rnd"), kPrng, rnd, d.s_rnd, d.s_rnd);

    WireId tff_in = net.merger(N("M_tff"), kRnd, rnd_fan[1], and_out, d.m_tff);
    net.feed(tff_in, tff_cd, 0);

    CellId ndro_rr = net.add(CellKind::NDRO, N("NDRO_rr"), kRnd);
    net.feed(rnd_fan[0], ndro_rr, 0);  // reset: suppress this epoch's flip
    net.feed(rn.e2d, ndro_rr, 1);      // set: re-arm for the next epoch
    net.feed(c1_raw, ndro_rr, 2);
    c_in = W("c_pre");
    net.drive(ndro_rr, 0, c_in, d.ndro_rr);
  } else if (rc.policy == ArbiterPolicy::RoundRobin) {
    net.feed(and_out, tff_cd, 0);
    c_in = c1_raw;
  } else {
    // Fixed priority: same hardware, flip pulse left unconnected.
    net.feed(and_out, tff_cd, 0);
    c_in = W("c_dead");
  }

  auto c_legs = net.splitter(N("S_c0"), kCd, c_in, d.s_c0, d.s_c0);
  auto c2o = net.splitter(N("S_c2o"), kS1, c_legs[0], d.s_c2, d.s_c2);
  auto c2i = net.splitter(N("S_c2i"), kS1, c_legs[1], d.s_c2, d.s_c2);

  // ---- routing stage 1 --------------------------------------------------
  auto e3f = net.splitter(N("S_e3s1"), kS1, rn.e3s1, d.s_e3s1, d.s_e3s1);
  auto t2f = net.splitter(N("S_thr2"), kS1, thr2, d.s_thr2, d.s_thr2);

  // Outer registers arm the normal windows; C dumps them.  Inner registers
  // hold the C pulse and arm the flipped windows.
  auto dff2 = [&](const std::string& name, const char* module, WireId data,
                  WireId r1, WireId r2, SimTime y1_delay, WireId& y1) {
    CellId c = net.add(CellKind::DFF2, name, module);
    net.feed(data, c, 0);
    net.feed(r1, c, 1);
    if (r2 != kNoWire) net.feed(r2, c, 2);
    y1 = net.wire(name + ".y1");
    net.drive(c, 0, y1, y1_delay);
    net.cell(c).jj = jj_count_of(CellKind::DFF2, 0, 1);  // dump output trimmed
    return c;
  };

  WireId ol_y, or_y, il_y, ir_y;
  dff2(N("OL"), kS1, e1s1[0], e3f[0], c2o[0], d.outer_read, ol_y);
  dff2(N("OR"), kS1, e1s1[1], t2f[0], c2o[1], d.outer_read, or_y);
  dff2(N("IL"), kS1, c2i[0], t2f[1], kNoWire, d.inner_l_read, il_y);
  dff2(N("IR"), kS1, c2i[1], e3f[1], kNoWire, d.inner_r_read, ir_y);

  WireId arm_l = net.merger(N("M_armL"), kS1, ol_y, il_y, d.m_arm);
  WireId arm_r = net.merger(N("M_armR"), kS1, or_y, ir_y, d.m_arm);

  auto la_fan = net.splitter(N("S_La"), kS1, arm_l, d.s_arm, d.s_arm);
  auto lb_fan = net.splitter(N("S_Lb"), kS1, la_fan[0], d.s_arm, d.s_arm);
  auto lc_fan = net.splitter(N("S_Lc"), kS1, lb_fan[1], d.s_arm, d.s_arm);
  auto ra_fan = net.splitter(N("S_Ra"), kS1, arm_r, d.s_arm, d.s_arm);
  auto rb_fan = net.splitter(N("S_Rb"), kS1, ra_fan[0], d.s_arm, d.s_arm);
  auto rc_fan = net.splitter(N("S_Rc"), kS2, rb_fan[1], d.s_arm, d.s_arm);

  // ---- data-guard distribution (epoch-end tap) --------------------------
  auto e4p = net.splitter(N("S_e4p"), kMisc, rn.e4g, d.s_e4g, d.s_e4g);
  rn.probe_guard = net.jtl(N("JTL_e4p"), kMisc, e4p[0], d.probe_jtl);
  net.wire_at(rn.probe_guard).name = prefix + ".probe_guard";
  auto e4a = net.splitter(N("S_e4a"), kMisc, e4p[1], d.s_e4g, d.s_e4g);
  auto e4b = net.splitter(N("S_e4b"), kMisc, e4a[0], d.s_e4g, d.s_e4g);
  auto e4c = net.splitter(N("S_e4c"), kMisc, e4a[1], d.s_e4g, d.s_e4g);
  auto e4d = net.splitter(N("S_e4d"), kMisc, e4c[0], d.s_e4g, d.s_e4g);
  auto e4e = net.splitter(N("S_e4e"), kMisc, e4c[1], d.s_e4g, d.s_e4g);

  // Arm-closing mergers: the opposite side's arm pulse, or the epoch-end
  // guard, closes a window.
  WireId close_l = net.merger(N("M_closeL"), kS2, ra_fan[1], e4b[0], d.m_close);
  WireId close_r = net.merger(N("M_closeR"), kS2, la_fan[1], e4b[1], d.m_close);
  auto cl_fan = net.splitter(N("S_closeL"), kS2, close_l, d.s_close, d.s_close);
  auto cr_fan = net.splitter(N("S_closeR"), kS2, close_r, d.s_close, d.s_close);

  // ---- per-input post-register chains -----------------------------------
  struct Side {
    WireId xbar_clk0, xbar_clk1;  // crossbar switch clocks
    WireId sel_clk0, sel_clk1;    // selection-gate clocks (L, R)
    WireId rla;                   // last-arrival leg
  };
  auto post_sr = [&](const std::string& sfx, WireId xm, const char* xm2_module,
                     WireId gd_reset, WireId gd_set, WireId gc_reset,
                     WireId gc_set) {
    Side s;
    auto xm1 = net.splitter(N("S_xm1" + sfx), kMisc, xm, d.xm_split, d.xm_split);

    // Data window gate: open only during the payload period, so control
    // pulses never clock the crossbar switches.
    CellId gd = net.add(CellKind::NDRO, N("gate_data" + sfx), kMisc);
    net.feed(gd_reset, gd, 0);
    net.feed(gd_set, gd, 1);
    net.feed(xm1[0], gd, 2);
    WireId xd = net.wire(N("Xd" + sfx));
    net.drive(gd, 0, xd, d.gate_out);
    auto xm2 = net.splitter(N("S_xm2" + sfx), xm2_module, xd, d.xm_split,
                            d.xm_split);
    s.xbar_clk0 = xm2[0];
    s.xbar_clk1 = xm2[1];

    // Control window gate: the dual; data pulses have no effect on the
    // routing and last-arrival logic.
    CellId gc = net.add(CellKind::NDRO, N("gate_ctl" + sfx), kMisc);
    net.feed(gc_reset, gc, 0);
    net.feed(gc_set, gc, 1);
    net.feed(xm1[1], gc, 2);
    WireId cg = net.wire(N("Cg" + sfx));
    net.drive(gc, 0, cg, d.gate_out);
    auto xm3 = net.splitter(N("S_xm3" + sfx), kMisc, cg, d.xm_split, d.xm_split);
    auto ctl2 =
        net.splitter(N("S_ctl2" + sfx), kMisc, xm3[0], d.xm_split, d.xm_split);
    s.sel_clk0 = ctl2[0];
    s.sel_clk1 = ctl2[1];
    s.rla = xm3[1];
    return s;
  };

  Side a = post_sr("A", xm_a, kXb, rn.e3x[8], e4e[0], e4d[0], rn.e3x[10]);
  Side b = post_sr("B", xm_b, kMisc, rn.e3x[9], e4e[1], e4d[1], rn.e3x[11]);

  // ---- stage 2: selection gates and assignment registers ----------------
  auto ndro = [&](const std::string& name, const char* module, WireId reset,
                  WireId set, WireId clk, SimTime delay) {
    CellId c = net.add(CellKind::NDRO, name, module);
    net.feed(reset, c, 0);
    net.feed(set, c, 1);
    net.feed(clk, c, 2);
    WireId w = net.wire(name + ".out");
    net.drive(c, 0, w, delay);
    return w;
  };

  WireId gla = ndro(N("gLA"), kS2, cl_fan[0], lc_fan[0], a.sel_clk0, d.gate_out);
  WireId glb = ndro(N("gLB"), kS2, cl_fan[1], lc_fan[1], b.sel_clk0, d.gate_out);
  WireId gra = ndro(N("gRA"), kS2, cr_fan[0], rc_fan[0], a.sel_clk1, d.gate_out);
  WireId grb = ndro(N("gRB"), kS2, cr_fan[1], rc_fan[1], b.sel_clk1, d.gate_out);

  // L2 assigns to output A, R2 to output B; readout port 1 serves input A,
  // port 2 input B.  The first reader consumes the armed datum and wins.
  CellId l2 = net.add(CellKind::DFF2, N("L2"), kS2);
  net.feed(lb_fan[0], l2, 0);
  net.feed(gla, l2, 1);
  net.feed(glb, l2, 2);
  WireId s_aa = W("sAa_raw");  // input A assigned output A
  WireId s_ba = W("sBa_raw");  // input B assigned output A
  net.drive(l2, 0, s_aa, d.stage2_read);
  net.drive(l2, 1, s_ba, d.stage2_read);

  CellId r2 = net.add(CellKind::DFF2, N("R2"), kS2);
  net.feed(rb_fan[0], r2, 0);
  net.feed(gra, r2, 1);
  net.feed(grb, r2, 2);
  WireId s_ab = W("sAb_raw");  // input A assigned output B
  WireId s_bb = W("sBb_raw");  // input B assigned output B
  net.drive(r2, 0, s_ab, d.stage2_read);
  net.drive(r2, 1, s_bb, d.stage2_read);

  auto f_aa = net.splitter(N("S_sAa"), kS2, s_aa, d.s_sig, d.s_sig);
  auto f_ba = net.splitter(N("S_sBa"), kS2, s_ba, d.s_sig, d.s_sig);
  auto f_ab = net.splitter(N("S_sAb"), kS2, s_ab, d.s_sig, d.s_sig);
  auto f_bb = net.splitter(N("S_sBb"), kS2, s_bb, d.s_sig, d.s_sig);

  // ---- crossbar ----------------------------------------------------------
  WireId set1 = net.merger(N("M_s1"), kXb, f_aa[0], f_bb[0], d.m_union);
  WireId set2 = net.merger(N("M_s2"), kXb, f_ba[0], f_ab[0], d.m_union);
  auto s1f = net.splitter(N("S_s1set"), kXb, set1, d.s_set, d.s_set);
  auto s2f = net.splitter(N("S_s2set"), kXb, set2, d.s_set, d.s_set);

  WireId d_aa = ndro(N("ndro_AA"), kXb, rn.e3x[0], s1f[0], a.xbar_clk0, d.xbar_ndro);
  WireId d_ab = ndro(N("ndro_AB"), kXb, rn.e3x[1], s2f[0], a.xbar_clk1, d.xbar_ndro);
  WireId d_ba = ndro(N("ndro_BA"), kXb, rn.e3x[2], s2f[1], b.xbar_clk0, d.xbar_ndro);
  WireId d_bb = ndro(N("ndro_BB"), kXb, rn.e3x[3], s1f[1], b.xbar_clk1, d.xbar_ndro);

  WireId x_a = net.merger(N("M_xA"), kXb, d_aa, d_ba, d.m_xbar);
  WireId x_b = net.merger(N("M_xB"), kXb, d_ab, d_bb, d.m_xbar);

  // Regeneration unions: one control pulse per assigned output.
  WireId r_a = net.merger(N("M_rA"), kS2, f_aa[1], f_ba[1], d.m_regen);
  WireId r_b = net.merger(N("M_rB"), kXb, f_ab[1], f_bb[1], d.m_regen);
  auto gr_a = net.splitter(N("S_grA"), kS2, r_a, d.s_regen_tap, d.s_regen_tap);
  auto gr_b = net.splitter(N("S_grB"), kXb, r_b, d.s_regen_tap, d.s_regen_tap);

  // ---- resettable last arrival ------------------------------------------
  auto rla_a = net.splitter(N("S_rlaA"), kLa, a.rla, d.s_rla, d.s_rla);
  auto rla_b = net.splitter(N("S_rlaB"), kLa, b.rla, d.s_rla, d.s_rla);

  auto la_dff2 = [&](const std::string& name, WireId data, WireId read,
                     WireId dump, WireId& y) {
    CellId c = net.add(CellKind::DFF2, name, kLa);
    net.feed(data, c, 0);
    net.feed(read, c, 1);
    net.feed(dump, c, 2);
    y = net.wire(name + ".y1");
    net.drive(c, 0, y, d.la_read);
    net.cell(c).jj = jj_count_of(CellKind::DFF2, 0, 1);
    return c;
  };
  WireId xla_y, yla_y;
  la_dff2(N("X_la"), rla_a[0], rla_b[1], rn.e3x[6], xla_y);
  la_dff2(N("Y_la"), rla_b[0], rla_a[1], rn.e3x[7], yla_y);

  WireId la = net.merger(N("M_la"), kLa, xla_y, yla_y, d.m_la);
  auto la_out = net.splitter(N("S_la"), kLa, la, d.s_la, d.s_la);

  // The last-arrival pulse regenerates the second packet's control pulse
  // on whichever output the first packet did not take.
  WireId g3 = ndro(N("gate3"), kXb, rn.e3x[4], gr_b[1], la_out[0], d.gate_out);
  WireId g4 = ndro(N("gate4"), kXb, rn.e3x[5], gr_a[1], la_out[1], d.gate_out);

  WireId c_a = net.merger(N("M_cA"), kXb, gr_a[0], g3, d.m_ctl);
  WireId c_b = net.merger(N("M_cB"), kXb, gr_b[0], g4, d.m_ctl);

  rn.out_a = net.merger(N("M_oA"), kMisc, x_a, c_a, d.m_out);
  rn.out_b = net.merger(N("M_oB"), kMisc, x_b, c_b, d.m_out);
  net.wire_at(rn.out_a).name = prefix + ".outA";
  net.wire_at(rn.out_b).name = prefix + ".outB";

  for (int c = c0; c < net.cell_count(); ++c) rn.cells.push_back(c);
  return rn;
}

void RouterNetlist::schedule_taps(Engine& eng, SimTime start) const {
  const SimTime cp = cfg.rl.control_period();
  const SimTime slot = cfg.rl.control_slot;
  const SimTime fesr = cfg.d.fe_split + sr_delay();
  eng.schedule(e1, start);
  eng.schedule(thr, start + SimTime(cfg.thr_slot) * slot);
  // Second threshold pulse: timed so the flipped-window arming pulses land
  // one picosecond before the first post-threshold readout clock.
  eng.schedule(thr, start + SimTime(cfg.thr_slot) * slot + fesr - 15);
  eng.schedule(e2, start + cp - slot);
  eng.schedule(e3s1, start + cp - 10);
  for (WireId w : e3x) eng.schedule(w, start + fesr + 12);
  eng.schedule(e4g, start + cp + fesr - 8);
  if (cfg.policy == ArbiterPolicy::RandomizedRR) {
    eng.schedule(e1_rnd, start + 3);
    eng.schedule(e2d, start + cp - 5);
  }
}

void RouterNetlist::inject(Engine& eng, SimTime start, int input,
                           const Packet& p) const {
  EncodeResult enc = encode_packet(cfg.rl, p);
  if (!enc.ok())
    throw std::invalid_argument(std::string("unencodable packet: ") +
                                codec_status_name(enc.status));
  WireId w = input == 0 ? in_a : in_b;
  for (SimTime t : enc.pulses) eng.schedule(w, start + t);
}

void RouterNetlist::inject_rand(Engine& eng, SimTime start) const {
  if (cfg.policy != ArbiterPolicy::RandomizedRR)
    throw std::logic_error("randomizer input only exists under RandomizedRR");
  // Latch the PRNG pulse during the previous epoch's data period (at the
  // epoch boundary when there is no previous epoch).
  eng.schedule(rnd_raw, std::max<SimTime>(0, start - cfg.rl.data_period()));
}

std::vector<SimTime> RouterNetlist::raw_output(const Engine& eng, SimTime start,
                                               Port port) const {
  const SimTime lo = start + data_latency();
  std::vector<SimTime> abs =
      eng.pulses_on(port == Port::Top ? out_a : out_b, lo, lo + cfg.epoch_len);
  for (SimTime& t : abs) t -= lo;
  return abs;
}

DecodeResult RouterNetlist::read_output(const Engine& eng, SimTime start,
                                        Port port) const {
  return decode_packet(cfg.rl, raw_output(eng, start, port));
}

std::vector<AuditCheck> RouterNetlist::audit() const {
  const RouterDelays& d = cfg.d;
  const Paths p(d);
  const SimTime cp = cfg.rl.control_period();
  const SimTime slot = cfg.rl.control_slot;
  const SimTime fesr = d.fe_split + sr_delay();
  const SimTime thr_t = SimTime(cfg.thr_slot) * slot;
  const int dcount = cfg.rl.dest_count;

  // Event times relative to the epoch start (A-side reference; the B side
  // trails by the input-skew picosecond everywhere).
  const SimTime extract = d.fe_split + d.fd_read;  // after slot centre
  const SimTime thr1_clk = thr_t + d.tff_thr + d.m_clk_cd;  // AND sample 1
  const SimTime e2_clk = cp - slot + d.m_clk_cd;          // AND sample 2
  const SimTime rnd_hop = cfg.policy == ArbiterPolicy::RandomizedRR
                              ? d.m_tff + d.ndro_rr
                              : 0;
  const SimTime c_legs = d.and_cd + rnd_hop + d.tff_cd + d.s_c0;
  const SimTime c_dump = e2_clk + c_legs + d.s_c2;     // latest C arrival
  const SimTime e3_read = cp - 10 + d.s_e3s1;          // normal-arm readout
  const SimTime arm_e3 = e3_read + d.outer_read + d.m_arm;
  const SimTime thr2_sched = thr_t + fesr - 15;
  const SimTime t2_read = thr2_sched + d.tff_thr + d.s_thr2;
  const SimTime arm_t2 = t2_read + d.outer_read + d.m_arm;       // normal R
  const SimTime arm_flip = t2_read + d.inner_l_read + d.m_arm;   // flipped L
  const SimTime sets_e3 = arm_e3 + 3 * d.s_arm;
  const SimTime store_e3 = arm_e3 + 2 * d.s_arm;
  const SimTime sets_t2 = arm_t2 + 3 * d.s_arm;
  const SimTime close_t2 = arm_t2 + d.s_arm + d.m_close + d.s_close;
  const SimTime sets_flip = arm_flip + 3 * d.s_arm;
  const SimTime close_flip = arm_flip + d.s_arm + d.m_close + d.s_close;
  auto slot_clk = [&](int s) {  // selection-gate clock of control slot s
    return (SimTime(s) * slot - slot / 2) + fesr + p.clk;
  };
  const SimTime guard_ctl_reset = cp + fesr - 8 + 4 * d.s_e4g;
  const SimTime guard_data_set = cp + fesr - 8 + 4 * d.s_e4g;
  const SimTime guard_close = cp + fesr - 8 + 3 * d.s_e4g + d.m_close + d.s_close;
  const SimTime epoch_tap = fesr + 12;  // e3x arrival
  const SimTime gd_clk_path = fesr + d.xm_split;  // pulse to gate_data clock
  const SimTime xb_clk_path =
      gd_clk_path + d.gate_out + d.xm_split;  // pulse to switch clock
  const SimTime last_data = cp + SimTime(cfg.rl.data_slot_count - 1) *
                                     cfg.rl.data_spacing;
  const SimTime rla_store =
      d.xm_split + d.gate_out + d.xm_split + d.s_rla;  // Xm to la register

  std::vector<AuditCheck> v;
  auto chk = [&](const std::string& n, SimTime lhs, char op, SimTime rhs) {
    bool ok = op == '<' ? lhs < rhs : lhs == rhs;
    v.push_back(AuditCheck{n, lhs, rhs, op, ok});
  };

  chk("extract_before_thr1_sample",
      slot * cfg.thr_slot - slot / 2 + extract + d.skew_b, '<', thr1_clk);
  chk("thr1_sample_before_post_extract", thr1_clk, '<',
      slot * cfg.thr_slot + slot / 2 + extract);
  chk("last_extract_before_e2_sample",
      slot * dcount - slot / 2 + extract + d.skew_b, '<', e2_clk);
  chk("c_dump_before_normal_arm_read", c_dump, '<', e3_read);
  chk("c_store_before_inner_read", c_dump, '<', t2_read);
  chk("second_threshold_after_first", thr_t, '<', thr2_sched);
  chk("normal_arm_before_slot1_clock", sets_e3, '<', slot_clk(1));
  chk("normal_store_before_gate_open", store_e3, '<', sets_e3);
  chk("flip_arm_one_ps_before_post_clock", sets_flip + 1, '=',
      slot_clk(cfg.thr_slot + 1));
  chk("normal_r_arm_before_post_clock", sets_t2, '<',
      slot_clk(cfg.thr_slot + 1));
  chk("last_pre_clock_before_r_arm", slot_clk(cfg.thr_slot) + d.skew_b, '<',
      sets_t2);
  chk("flip_close_before_post_clock", close_flip, '<',
      slot_clk(cfg.thr_slot + 1));
  chk("normal_close_after_pre_clock", slot_clk(cfg.thr_slot) + d.skew_b, '<',
      close_t2);
  chk("ctl_window_open_before_slot1", epoch_tap, '<',
      slot - slot / 2 + gd_clk_path);
  chk("ctl_window_close_after_last_ctl",
      slot * dcount - slot / 2 + gd_clk_path + d.skew_b, '<', guard_ctl_reset);
  chk("data_window_open_before_first_data", guard_data_set, '<',
      cp + gd_clk_path);
  chk("data_window_close_after_last_data", last_data + gd_clk_path + d.skew_b,
      '<', cfg.epoch_len + epoch_tap);
  chk("switch_reset_after_prev_data",
      last_data + xb_clk_path + d.skew_b - cfg.epoch_len, '<', epoch_tap);
  chk("switch_reset_before_first_set", epoch_tap, '<',
      slot - slot / 2 + fesr + p.xset);
  chk("last_set_before_first_data_read",
      slot * dcount - slot / 2 + fesr + p.xset + d.skew_b, '<',
      cp + xb_clk_path);
  chk("la_dump_before_first_store", epoch_tap, '<',
      slot - slot / 2 + fesr + rla_store);
  chk("guard_close_after_last_clock", slot_clk(dcount) + d.skew_b, '<',
      guard_close);
  chk("guard_close_after_flip_arm", sets_flip + d.skew_b, '<', guard_close);
  chk("tie_gate_set_meets_clock", p.gate_set, '=', d.skew_b + p.la_clk);
  chk("ghost_coalesces_with_regen", p.ghost, '=', p.regen);

  // Published module latencies (reference configuration: exact by design).
  chk("delay_conflict_detection", d.and_cd + d.tff_cd + d.s_c0, '=', 41);
  chk("delay_stage1_arm",
      d.tff_thr + d.s_thr2 + d.inner_l_read + d.m_arm + 2 * d.s_arm, '=', 50);
  chk("delay_stage2_readout", p.raw, '=', 41);
  chk("delay_crossbar", p.data, '=', 34);
  chk("delay_last_arrival", d.la_read + d.m_la, '=', 29);
  return v;
}

std::map<std::string, int> RouterNetlist::jj_by_module(const Netlist& net) const {
  std::map<std::string, int> m;
  for (CellId c : cells) m[net.cell(c).module] += net.cell(c).jj;
  return m;
}

int RouterNetlist::jj_router_total(const Netlist& net) const {
  int t = 0;
  for (CellId c : cells)
    if (net.cell(c).module != kPrng) t += net.cell(c).jj;
  return t;
}

}  // namespace pastnoc
