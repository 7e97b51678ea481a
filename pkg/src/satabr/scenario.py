"""The n Source + VBR topology, run loop and metrics.

::

    src_i --(fd/2)--> SW1 ==[bottleneck, satellite]==> SW2 --(dest_leg)--> dst_i
                       ^ VBR source                        \\--> VBR sink

ERICA runs on SW1's satellite-facing output port.  The reverse path mirrors
the forward delays and carries ACK and backward RM cells; backward RM cells
are stamped when they pass SW1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

from .abr import AbrDestination, AbrSource, Service
from .cells import BACKWARD_RM, DATA, VBR_DATA, Cell, DepthRecorder, Link, OutputPort, PortQueues
from .config import ScenarioConfig
from .engine import PS_PER_MS, PS_PER_S, PS_PER_US, Simulator, ms, to_ms
from .erica import EricaAgent, EricaPlusParams, EricaPortState, Scheme
from .tcp import Encapsulation, Reassembler, Segment, TcpReceiver, TcpSender, segment_to_cells, window_in_cells
from .vbr import VbrSource

log = logging.getLogger(__name__)

BOUNDED = "BOUNDED"
UNBOUNDED = "UNBOUNDED"


@dataclass
class RunReport:
    name: str
    max_abr_queue_cells: int
    max_total_queue_cells: int
    max_queue_rtt_fraction: float
    rtt_in_cells: int
    per_conn_goodput: list[float]
    bottleneck_utilization: float
    drops: int
    bounded_verdict: str
    timeouts: int
    window_cells_per_conn: int
    window_sum_cells: int
    duration_ms: float
    events: int
    config: dict[str, Any] = field(default_factory=dict)
    reference: dict[str, Any] = field(default_factory=dict)
    queue_series: list[tuple[float, int, int]] = field(default_factory=list, repr=False)
    traces: dict[str, list[tuple]] = field(default_factory=dict, repr=False)

    def summary(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "max_abr_queue_cells": self.max_abr_queue_cells,
            "max_total_queue_cells": self.max_total_queue_cells,
            "max_queue_rtt_fraction": round(self.max_queue_rtt_fraction, 6),
            "rtt_in_cells": self.rtt_in_cells,
            "per_conn_goodput": [round(g, 3) for g in self.per_conn_goodput],
            "bottleneck_utilization": round(self.bottleneck_utilization, 6),
            "drops": self.drops,
            "bounded_verdict": self.bounded_verdict,
            "timeouts": self.timeouts,
            "window_cells_per_conn": self.window_cells_per_conn,
            "window_sum_cells": self.window_sum_cells,
            "duration_ms": round(self.duration_ms, 6),
            "events": self.events,
            "config": self.config,
            "reference": self.reference,
        }


def boundedness_verdict(depth_series: list[tuple[float, int]], rtt_ms: float) -> str:
    """Classify a queue trajectory as growing without bound or not.

    ``depth_series`` holds ``(time_ms, depth)`` samples.  The queue is called
    UNBOUNDED when the maxima over the last five RTT-long windows strictly
    increase and the final maximum exceeds twice the largest depth seen up
    to the run's midpoint.
    """
    if not depth_series:
        return BOUNDED
    t_end = depth_series[-1][0]
    t_start = depth_series[0][0]
    if t_end - t_start < 5 * rtt_ms:
        return BOUNDED
    maxima = []
    for k in range(5, 0, -1):
        lo, hi = t_end - k * rtt_ms, t_end - (k - 1) * rtt_ms
        window = [d for t, d in depth_series if lo < t <= hi]
        maxima.append(max(window) if window else 0)
    mid = (t_start + t_end) / 2
    mid_max = max((d for t, d in depth_series if t <= mid), default=0)
    increasing = all(b > a for a, b in zip(maxima, maxima[1:]))
    if increasing and maxima[-1] > 2 * mid_max:
        return UNBOUNDED
    return BOUNDED


class Scenario:
    """A wired simulation built from a :class:`ScenarioConfig`."""

    def __init__(self, cfg: ScenarioConfig, traces: frozenset[str] | set[str] = frozenset()) -> None:
        cfg.validate()
        self.cfg = cfg
        self.traces = set(traces)
        self.sim = sim = Simulator()
        rate = cfg.link_cell_rate
        access_ms, sat_ms, dest_ms = cfg.delays_ms()
        self.access_delay = ms(access_ms)
        self.sat_delay = ms(sat_ms)
        self.dest_delay = ms(dest_ms)
        self.rtt = ms(cfg.eff_rtt_ms)
        self.duration = round(self.rtt * cfg.duration_rtts)
        self.encap = Encapsulation(cfg.header_overhead, cfg.trailer)

        # bottleneck port at SW1
        self.recorder = DepthRecorder(round(cfg.sample_ms * PS_PER_MS))
        self.sat_link = Link(sim, rate, self.sat_delay, self._sw2_forward, "sw1-sw2")
        self.port = OutputPort(sim, self.sat_link, PortQueues(cfg.buffer_capacity, self.recorder))
        self.rev_sat_link = Link(sim, rate, self.sat_delay, self._sw1_reverse, "sw2-sw1")

        self.erica: EricaAgent | None = None
        if cfg.service is Service.ABR and cfg.scheme != "none":
            state = EricaPortState(
                rate,
                target_utilization=cfg.target_utilization,
                interval_len_time=ms(cfg.interval_ms),
                interval_len_cells=cfg.interval_cells,
                cbr_reserved=cfg.cbr_reserved,
                scheme=Scheme(cfg.scheme),
                qplus=EricaPlusParams(round(cfg.erica_plus_t0_us * PS_PER_US), cfg.erica_plus_b, cfg.erica_plus_qdlf),
                clamp_er_to_capacity=cfg.clamp_er_to_capacity,
                overload_floor=cfg.overload_floor,
                capacity_floor=cfg.capacity_floor,
            )
            if "erica" in self.traces:
                state.trace = []
            self.erica = EricaAgent(sim, state, lambda: len(self.port.queues.abr_fifo))
            self.port.on_arrival = self.erica.on_forward

        rto = round(cfg.rto_rtts * self.rtt) if cfg.rto_rtts > 0 else None
        self.sources: list[AbrSource] = []
        self.senders: list[TcpSender] = []
        self.receivers: list[TcpReceiver] = []
        self.dests: list[AbrDestination] = []
        self.dest_links: list[Link] = []
        self.rev_access: list[Link] = []
        self._src_reasm: list[Reassembler] = []
        self.acks_delivered = [0] * cfg.n_sources
        self.brm_delivered = [0] * cfg.n_sources
        for vc in range(cfg.n_sources):
            self._wire_connection(vc, rate, rto)

        self.vbr: VbrSource | None = None
        self.vbr_delivered = 0
        self.vbr_link: Link | None = None
        if cfg.vbr:
            self.vbr_link = Link(sim, rate, self.dest_delay, self._vbr_sink, "sw2-vbrsink")
            self.vbr = VbrSource(
                sim,
                self.port.arrive,
                cfg.vbr_peak_fraction * rate,
                on_time=ms(cfg.vbr_on_ms),
                off_time=ms(cfg.vbr_off_ms),
                start_at=ms(cfg.vbr_start_ms),
            )

        self._util_mark: tuple[int, int] | None = None

    # -- wiring --------------------------------------------------------------
    def _wire_connection(self, vc: int, rate: float, rto: int | None) -> None:
        cfg, sim = self.cfg, self.sim
        fwd_access = Link(sim, rate, self.access_delay, self.port.arrive, f"src{vc}-sw1")
        source = AbrSource(
            sim, vc, fwd_access, pcr=rate, icr=cfg.icr_fraction * rate,
            nrm=cfg.nrm, service=cfg.service, mcr_floor=cfg.mcr_floor,
        )
        encap = self.encap

        def emit(seg: Segment, vc: int = vc, source: AbrSource = source) -> None:
            source.enqueue(segment_to_cells(seg, vc, sim._now, encap))

        sender = TcpSender(sim, emit, mss=cfg.mss, rcvwnd=cfg.eff_rcvwnd, rto=rto)

        rev_dest = Link(sim, rate, self.dest_delay, self.rev_sat_link.transmit, f"dst{vc}-sw2")

        def send_ack(seg: Segment, vc: int = vc) -> None:
            for c in segment_to_cells(seg, vc, sim._now, encap):
                dest.send_reverse(c)

        receiver = TcpReceiver(
            sim, send_ack, delayed_ack=cfg.delayed_ack,
            delack_timeout=ms(100) if cfg.delayed_ack else None,
        )
        dest_reasm = Reassembler(receiver.on_segment)
        dest = AbrDestination(sim, vc, rev_dest, pcr=rate, on_data=dest_reasm.push)
        dest_link = Link(sim, rate, self.dest_delay, dest.receive, f"sw2-dst{vc}")
        src_reasm = Reassembler(sender.on_ack_segment)
        rev_access = Link(sim, rate, self.access_delay, self._make_source_rx(vc, source, src_reasm), f"sw1-src{vc}")

        if "acr" in self.traces:
            source.acr_trace = [(0, source.acr)]
        if "cwnd" in self.traces:
            sender.cwnd_trace = []
        self.sources.append(source)
        self.senders.append(sender)
        self.receivers.append(receiver)
        self.dests.append(dest)
        self.dest_links.append(dest_link)
        self.rev_access.append(rev_access)
        self._src_reasm.append(src_reasm)

    def _make_source_rx(self, vc: int, source: AbrSource, reasm: Reassembler):
        acks, brms = self.acks_delivered, self.brm_delivered

        def rx(c: Cell) -> None:
            if c.kind is BACKWARD_RM:
                brms[vc] += 1
                source.on_backward_rm(c)
            else:
                acks[vc] += 1
                reasm.push(c)

        return rx

    def _sw2_forward(self, c: Cell) -> None:
        if c.kind is VBR_DATA:
            self.vbr_link.transmit(c)
        else:
            self.dest_links[c.vc].transmit(c)

    def _sw1_reverse(self, c: Cell) -> None:
        if self.erica is not None and c.kind is BACKWARD_RM:
            self.erica.on_backward(c)
        self.rev_access[c.vc].transmit(c)

    def _vbr_sink(self, c: Cell) -> None:
        self.vbr_delivered += 1

    # -- accounting ----------------------------------------------------------
    def links(self) -> list[Link]:
        out = [self.sat_link, self.rev_sat_link, *self.dest_links, *self.rev_access]
        out += [s.link for s in self.sources]
        out += [d.reverse_link for d in self.dests]
        if self.vbr_link is not None:
            out.append(self.vbr_link)
        return out

    def conservation(self) -> dict[str, int]:
        """Cell counts for the conservation audit, each taken from its own component."""
        injected = sum(s.emitted for s in self.sources) + sum(d.injected for d in self.dests)
        if self.vbr is not None:
            injected += self.vbr.emitted
        delivered = (
            sum(d.received for d in self.dests)
            + sum(self.acks_delivered)
            + sum(self.brm_delivered)
            + self.vbr_delivered
        )
        queued = len(self.port.queues)
        in_flight = sum(link.in_flight for link in self.links())
        return {
            "injected": injected,
            "delivered": delivered,
            "queued": queued,
            "in_flight": in_flight,
            "dropped": self.port.queues.drop_count,
        }

    def window_cells_per_conn(self) -> int:
        return window_in_cells(self.cfg.eff_rcvwnd, self.cfg.mss, self.encap)

    @property
    def rtt_in_cells(self) -> int:
        return round(self.rtt * self.cfg.link_cell_rate / PS_PER_S)

    # -- running -------------------------------------------------------------
    def start(self) -> None:
        for sender in self.senders:
            sender.start()
        if self.vbr is not None:
            self.vbr.start()
        util_from = max(0, self.duration - 5 * self.rtt)
        self.sim.schedule(util_from, self._mark_util)

    def _mark_util(self, _: Any = None) -> None:
        self._util_mark = (self.sim._now, self.port.abr_sent)

    def run(self) -> RunReport:
        self.start()
        self.sim.run_until(self.duration)
        return self.report()

    def report(self) -> RunReport:
        cfg = self.cfg
        q = self.port.queues
        end = self.sim.now()
        rows = self.recorder.finish(end) if end > 0 else []
        win = self.recorder.window
        series = [(to_ms(w * win), a, t) for w, a, t in rows]
        verdict = boundedness_verdict([(t, a) for t, a, _ in series], to_ms(self.rtt))
        seconds = end / PS_PER_S if end else 1.0
        goodput = [r.delivered_bytes / seconds for r in self.receivers]
        if self._util_mark is not None and end > self._util_mark[0]:
            t0, sent0 = self._util_mark
            util = (self.port.abr_sent - sent0) / ((end - t0) * cfg.link_cell_rate / PS_PER_S)
        else:
            util = 0.0
        wcells = self.window_cells_per_conn()
        traces: dict[str, list[tuple]] = {}
        if "acr" in self.traces:
            traces["acr"] = [(to_ms(t), vc, a) for vc, s in enumerate(self.sources) for t, a in s.acr_trace]
        if "cwnd" in self.traces:
            traces["cwnd"] = [
                (to_ms(t), vc, c, u, n) for vc, s in enumerate(self.senders) for t, c, u, n in s.cwnd_trace
            ]
        if self.erica is not None and self.erica.state.trace is not None:
            traces["erica"] = [(to_ms(t), *rest) for t, *rest in self.erica.state.trace]
        return RunReport(
            name=cfg.name,
            max_abr_queue_cells=q.max_abr_depth,
            max_total_queue_cells=q.max_total_depth,
            max_queue_rtt_fraction=q.max_abr_depth / self.rtt_in_cells,
            rtt_in_cells=self.rtt_in_cells,
            per_conn_goodput=goodput,
            bottleneck_utilization=util,
            drops=q.drop_count,
            bounded_verdict=verdict,
            timeouts=sum(s.stats.timeouts for s in self.senders),
            window_cells_per_conn=wcells,
            window_sum_cells=wcells * cfg.n_sources,
            duration_ms=to_ms(end),
            events=self.sim.dispatched,
            config=config_dict(cfg),
            reference=dict(cfg.reference),
            queue_series=series,
            traces=traces,
        )


def config_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    out = {}
    for key, value in vars(cfg).items():
        if key == "reference":
            continue
        if isinstance(value, Service):
            value = value.value
        out[key] = value
    return out


def run_scenario(cfg: ScenarioConfig, traces: frozenset[str] | set[str] = frozenset()) -> RunReport:
    scenario = Scenario(cfg, traces)
    log.info("running %s for %.1f ms", cfg.name, to_ms(scenario.duration))
    return scenario.run()
