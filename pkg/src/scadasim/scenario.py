"""Scenario configuration, presets, and the deterministic simulation loop."""
from dataclasses import dataclass, field, replace
import hashlib
import heapq
import json
import os

import numpy as np

from . import __version__
from .attacks import (Approach, AttackError, AttackSpec, Kind, behavioral_plan, inject, parse_spec)
from .capture import AttackLabel, PacketRecord, finalize, reindex, write_labels, write_pcap
from .codec import (ALL_NODES, NodeId, build_read_request, build_read_response, build_write_request,
                    build_write_response, encode_frame, hello, Frame)
from .netstack import (ATTACKER_IP, HMI_A_IP, HMI_B_IP, MAC_PREFIX, OPCUA_PORT, PLC_IP, Host,
                       TcpSession, arp_sweep, parse_packet, syn_probe, tcp_segment, ipv4_packet,
                       ethernet, ETH_IPV4, RST)
from .plc import CycleRecorder, ControlParams, Firmware, activate, initial_image, scan_cycle
from .process import DEFAULT_PLANT, ProcessState, actuate, check_invariants, read_sensors, step
from .rng import ALGORITHM, SimRandom
from .sidechannel import (TemperatureModel, Timeline, synth_audio, write_sidechannel_csv, write_wav)

US = 1_000_000
ARP_INTERVAL_S = 0.05
HANDSHAKE_LEAD_S = 0.05
FILE_TYPES = ("pcap", "labels", "wav", "sidechannel", "summary")


class ConfigError(ValueError):
    """Invalid scenario configuration; the message starts with the field path."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class ClientConfig:
    name: str
    ip: str
    poll_period_s: float = 2.0
    offset_s: float = 0.05


@dataclass(frozen=True)
class OutputFile:
    file: str
    type: str
    # pcap only: "final" (after all attacks) or "clean" (before synthetic injection)
    stage: str = "final"
    client: str = None  # keep only packets to/from this IP
    t_range: tuple = None  # keep only packets with capture time in [t0, t1)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    duration_s: float
    seed: int = 0
    dt_s: float = 0.1
    # uncaptured honest lead-in, so forged firmware has a recorded cycle from the start
    warmup_s: float = 0.0
    clients: tuple = (
        ClientConfig("hmi_a", HMI_A_IP, 2.0, 0.05),
        ClientConfig("hmi_b", HMI_B_IP, 2.0, 1.05),
    )
    control: ControlParams = ControlParams()
    attacks: tuple = ()
    outputs: tuple = ()
    response_latency_s: tuple = (0.002, 0.008)

    def validate(self):
        if not self.duration_s > 0:
            raise ConfigError("duration_s", f"must be positive, got {self.duration_s}")
        if not self.dt_s > 0:
            raise ConfigError("dt_s", f"must be positive, got {self.dt_s}")
        if self.warmup_s < 0:
            raise ConfigError("warmup_s", "must not be negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")
        lo, hi = self.response_latency_s
        if not 0 <= lo <= hi < self.dt_s / 2:
            raise ConfigError("response_latency_s", "need 0 <= low <= high < dt_s / 2")
        ips = set()
        for i, c in enumerate(self.clients):
            if c.poll_period_s < self.dt_s:
                raise ConfigError(f"clients[{i}].poll_period_s", "must be >= dt_s")
            if c.offset_s < HANDSHAKE_LEAD_S:
                raise ConfigError(f"clients[{i}].offset_s", f"must be >= {HANDSHAKE_LEAD_S}")
            if c.ip in ips or c.ip in (PLC_IP, ATTACKER_IP):
                raise ConfigError(f"clients[{i}].ip", f"duplicate or reserved address {c.ip}")
            ips.add(c.ip)
        for i, spec in enumerate(self.attacks):
            if spec.approach is Approach.BEHAVIORAL and spec.window[1] > self.duration_s:
                raise ConfigError(f"attacks[{i}]", f"{spec.to_text()} ends after duration_s")
        try:
            behavioral_plan([(i + 1, s) for i, s in enumerate(self.attacks)
                             if s.approach is Approach.BEHAVIORAL], self.duration_s)
        except AttackError as exc:
            raise ConfigError("attacks", str(exc)) from None
        names = [o.file for o in self.outputs]
        if len(set(names)) != len(names):
            raise ConfigError("outputs", "file names must be unique")
        for i, o in enumerate(self.outputs):
            if o.type not in FILE_TYPES:
                raise ConfigError(f"outputs[{i}].type", f"unknown type {o.type!r}")
            if os.path.basename(o.file) != o.file or not o.file:
                raise ConfigError(f"outputs[{i}].file", "must be a plain file name")
            if o.stage not in ("final", "clean"):
                raise ConfigError(f"outputs[{i}].stage", f"unknown stage {o.stage!r}")
        return self

    @property
    def labeled_attacks(self):
        return [(i + 1, spec) for i, spec in enumerate(self.attacks)]


# ---------------------------------------------------------------- presets

def _ds1(seed):
    return ScenarioConfig(
        name="ds1", duration_s=2460.0, seed=seed,
        attacks=(AttackSpec(Kind.ZERO_VALUES, (1500, 1700)),
                 AttackSpec(Kind.HALF_FREQUENCY, (3000, 3500))),
        outputs=(
            OutputFile("ds1_hmi21_clean.pcap", "pcap", "clean", HMI_A_IP),
            OutputFile("ds1_hmi12_clean.pcap", "pcap", "clean", HMI_B_IP),
            OutputFile("ds1_hmi21_attacked.pcap", "pcap", "final", HMI_A_IP),
            OutputFile("ds1_hmi12_attacked.pcap", "pcap", "final", HMI_B_IP),
            OutputFile("ds1_labels.csv", "labels"),
        ),
    )


DS2_SPLIT_S = 1060.0


def _ds2(seed):
    return ScenarioConfig(
        name="ds2", duration_s=2460.0, seed=seed,
        attacks=(AttackSpec(Kind.RECON_SWEEP, (600.0, 600.0)),
                 AttackSpec(Kind.FORGED_VALUES, (1500.0, 1800.0), replay_speed=0.5)),
        outputs=(
            OutputFile("ds2_recon.pcap", "pcap", t_range=(0.0, DS2_SPLIT_S)),
            OutputFile("ds2_forged.pcap", "pcap", t_range=(DS2_SPLIT_S, 2460.0)),
            OutputFile("ds2_combined.pcap", "pcap"),
            OutputFile("ds2_labels.csv", "labels"),
            OutputFile("ds2_summary.json", "summary"),
        ),
    )


# The warm-up lands a setpoint cut-off exactly at the dry-run start; the
# valve window opens just before the next cut-off after recovery.
DS3_SETPOINT = 6.0
DS3_WARMUP_S = 566.0
DS3_DRY = (65.0, 215.0)
DS3_VALVE = (530.0, 590.0)


def _ds3(seed):
    return ScenarioConfig(
        name="ds3", duration_s=600.0, seed=seed, warmup_s=DS3_WARMUP_S,
        control=ControlParams(setpoint=DS3_SETPOINT),
        attacks=(AttackSpec(Kind.DRY_RUN_PUMP, DS3_DRY),
                 AttackSpec(Kind.VALVE_STUCK_OPEN, DS3_VALVE)),
        outputs=(
            OutputFile("ds3_network.pcap", "pcap"),
            OutputFile("ds3_audio.wav", "wav"),
            OutputFile("ds3_sidechannel.csv", "sidechannel"),
            OutputFile("ds3_labels.csv", "labels"),
        ),
    )


PRESETS = {"ds1": _ds1, "ds2": _ds2, "ds3": _ds3}


def preset(name, seed=0):
    try:
        return PRESETS[name](seed).validate()
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def without_attacks(config):
    """Same scenario with every attack removed (the clean reference run)."""
    return replace(config, name=config.name + "_clean", attacks=())


# ---------------------------------------------------------------- config files

def _spec_from_json(i, item):
    if isinstance(item, str):
        text, extra = item, {}
    elif isinstance(item, dict) and "spec" in item:
        text, extra = item["spec"], {k: v for k, v in item.items() if k != "spec"}
    else:
        raise ConfigError(f"attacks[{i}]", "expected a spec string or an object with 'spec'")
    try:
        spec = parse_spec(text)
        return replace(spec, **extra) if extra else spec
    except (AttackError, TypeError) as exc:
        raise ConfigError(f"attacks[{i}]", str(exc)) from None


def config_from_dict(data):
    """Build a ScenarioConfig from the JSON config schema (see README)."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected an object")
    known = {"name", "duration_s", "seed", "dt_s", "warmup_s", "clients", "control", "attacks",
             "outputs", "response_latency_s", "preset"}
    for key in data:
        if key not in known:
            raise ConfigError(key, "unknown field")
    base = preset(data["preset"], int(data.get("seed", 0))) if "preset" in data else None
    kwargs = {}
    for key in ("name", "duration_s", "seed", "dt_s", "warmup_s"):
        if key in data:
            kwargs[key] = data[key]
    for key in ("duration_s", "dt_s", "warmup_s"):
        if key in kwargs:
            if isinstance(kwargs[key], bool) or not isinstance(kwargs[key], (int, float)):
                raise ConfigError(key, "must be a number")
            kwargs[key] = float(kwargs[key])
    if "seed" in kwargs:
        if isinstance(kwargs["seed"], bool) or not isinstance(kwargs["seed"], int):
            raise ConfigError("seed", "must be an integer")
    if "response_latency_s" in data:
        kwargs["response_latency_s"] = tuple(float(v) for v in data["response_latency_s"])
    if "clients" in data:
        clients = []
        for i, c in enumerate(data["clients"]):
            try:
                clients.append(ClientConfig(**c))
            except TypeError as exc:
                raise ConfigError(f"clients[{i}]", str(exc)) from None
        kwargs["clients"] = tuple(clients)
    if "control" in data:
        try:
            kwargs["control"] = ControlParams(**data["control"])
        except (TypeError, ValueError) as exc:
            raise ConfigError("control", str(exc)) from None
    if "attacks" in data:
        kwargs["attacks"] = tuple(_spec_from_json(i, a) for i, a in enumerate(data["attacks"]))
    if "outputs" in data:
        outs = []
        for i, o in enumerate(data["outputs"]):
            try:
                o = dict(o)
                if o.get("t_range") is not None:
                    o["t_range"] = tuple(float(v) for v in o["t_range"])
                outs.append(OutputFile(**o))
            except TypeError as exc:
                raise ConfigError(f"outputs[{i}]", str(exc)) from None
        kwargs["outputs"] = tuple(outs)
    if base is not None:
        config = replace(base, **kwargs)
    else:
        for key in ("name", "duration_s"):
            if key not in kwargs:
                raise ConfigError(key, "required")
        config = ScenarioConfig(**kwargs)
    return config.validate()


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config ({exc})") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON ({exc})") from None
    return config_from_dict(data)


def config_to_dict(config):
    return {
        "name": config.name,
        "duration_s": config.duration_s,
        "seed": int(config.seed),
        "dt_s": config.dt_s,
        "warmup_s": config.warmup_s,
        "response_latency_s": list(config.response_latency_s),
        "clients": [vars(c) for c in config.clients],
        "control": {"low_threshold": config.control.low_threshold,
                    "high_threshold": config.control.high_threshold,
                    "setpoint": config.control.setpoint},
        "attacks": [{"spec": s.to_text(), "replay_speed": s.replay_speed, "mode": s.mode}
                    for s in config.attacks],
        "outputs": [{k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(o).items()}
                    for o in config.outputs],
    }


# ---------------------------------------------------------------- simulation

@dataclass
class RunResult:
    config: ScenarioConfig
    clean: list  # finalized records before synthetic injection
    records: list  # finalized, labeled records after all attacks
    timeline: Timeline
    labels: list  # AttackLabel per configured attack
    audio: np.ndarray = None
    files: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    max_conservation_error: float = 0.0
    firmware_log: list = field(default_factory=list)


class _Network:
    """Hosts, sessions and the raw (ts_us, bytes, attack_id, name) record list."""

    def __init__(self, config, rng):
        self.rng = rng
        self.raw = []
        names = [("plc", PLC_IP)] + [(c.name, c.ip) for c in config.clients] + [("attacker", ATTACKER_IP)]
        suffixes = []
        while len(suffixes) < len(names):
            s = rng.integer(1, 255)
            if s not in suffixes:
                suffixes.append(s)
        self.hosts = {}
        for (name, ip), s in zip(names, suffixes):
            self.hosts[ip] = Host(name, MAC_PREFIX + bytes([s]), ip, ttl=64 if name != "plc" else 30,
                                  ip_id=rng.integer(0, 65536))
        self.plc = self.hosts[PLC_IP]
        self.sessions = {}
        self.handles = {}

    def emit(self, items, attack=(0, "benign")):
        for ts, data in items:
            self.raw.append((ts, data, attack[0], attack[1]))

    def open_session(self, client_ip, ts, attack=(0, "benign")):
        client = self.hosts[client_ip]
        sess = TcpSession(client, self.plc, self.rng.integer(49152, 65536), OPCUA_PORT,
                          self.rng.integer(0, 2**32), self.rng.integer(0, 2**32))
        self.sessions[client_ip] = sess
        self.handles[client_ip] = 0
        self.emit(sess.handshake(ts), attack)
        self.emit([sess.send(True, encode_frame(hello()), ts + 1000),
                   sess.send(False, encode_frame(Frame("ACK")), ts + 1400),
                   sess.ack(True, ts + 1600)], attack)
        return sess

    def next_handle(self, client_ip):
        self.handles[client_ip] += 1
        return self.handles[client_ip]

    def latency_us(self, lo, hi):
        return int(round(self.rng.uniform(None, lo, hi) * US))

    def exchange(self, client_ip, request, response_fn, ts, lat_us, attack=(0, "benign")):
        sess = self.sessions[client_ip]
        self.emit([sess.send(True, encode_frame(request), ts)], attack)
        response = response_fn(request)
        self.emit([sess.send(False, encode_frame(response), ts + lat_us),
                   sess.ack(True, ts + lat_us + 300)], attack)
        return response


def _reported_values(nodes):
    return {int(n): v for n, v in nodes.items()}


def run(config, out_dir=None):
    """Simulate ``config``; write the manifest files when ``out_dir`` is given."""
    config.validate()
    rng = SimRandom(config.seed)
    net = _Network(config, rng)
    dt = config.dt_s
    dt_us = int(round(dt * US))
    warm_us = int(round(config.warmup_s * US))
    n_steps = int(round((config.warmup_s + config.duration_s) / dt))
    n_capture = int(round(config.duration_s / dt))
    params = config.control

    attacks = config.labeled_attacks
    hooks = behavioral_plan([(i, s) for i, s in attacks if s.approach is Approach.BEHAVIORAL])
    physical = [(s.window[0], s.window[1]) for _, s in attacks
                if s.kind in (Kind.DRY_RUN_PUMP, Kind.VALVE_STUCK_OPEN)]
    temperature = TemperatureModel.draw(physical, rng)

    # network events in capture microseconds: (ts, seq, kind, payload)
    queue = []
    seq = 0

    def schedule(ts, kind, payload=None):
        nonlocal seq
        heapq.heappush(queue, (ts, seq, kind, payload))
        seq += 1

    cap_us = int(round(config.duration_s * US))
    for c in config.clients:
        schedule(int(round((c.offset_s - HANDSHAKE_LEAD_S) * US)), "open", c)
    pending_hooks = [(int(round(h.t * US)), h) for h in hooks]

    state = ProcessState()
    image = initial_image(read_sensors(state, DEFAULT_PLANT, temperature.at(-config.warmup_s)), state, params)
    recorder = CycleRecorder(dt)
    t_arr = np.empty(n_capture)
    pump_arr = np.zeros(n_capture, dtype=bool)
    valve_arr = np.zeros(n_capture, dtype=bool)
    flow_arr = np.zeros(n_capture)
    temp_arr = np.zeros(n_capture)
    max_err = 0.0
    firmware_log = []
    lat_lo, lat_hi = config.response_latency_s
    first_capture_step = n_steps - n_capture

    def respond(request):
        return build_read_response(request.handle, _reported_values(image.nodes))

    for k in range(n_steps):
        cap_k = k * dt_us - warm_us  # capture time of this step, us
        t_cap = cap_k / US
        temp = temperature.at(t_cap)
        sensors = read_sensors(state, DEFAULT_PLANT, temp)

        while pending_hooks and pending_hooks[0][0] <= cap_k:
            ts, hook = pending_hooks.pop(0)
            if hook.action == "firmware":
                image = activate(image, hook.firmware, t_cap, recorder, hook.replay_speed)
                firmware_log.append((t_cap, hook.firmware.value))
            else:
                schedule(ts, "recon", hook)

        image, pump_cmd, valve_cmd = scan_cycle(image, params, sensors, replace(state, t=t_cap))
        if image.firmware is Firmware.HONEST:
            recorder.observe(t_cap, image.nodes)
        else:
            recorder.interrupt()

        if k >= first_capture_step:
            i = k - first_capture_step
            t_arr[i] = t_cap
            pump_arr[i] = state.pump_on
            valve_arr[i] = state.valve_open
            flow_arr[i] = sensors.b102_flow
            temp_arr[i] = temp
        state = actuate(state, pump_cmd, valve_cmd)

        while queue and queue[0][0] < cap_k + dt_us:
            ts, _, kind, payload = heapq.heappop(queue)
            if ts >= cap_us:
                continue
            if kind == "open":
                net.open_session(payload.ip, ts)
                schedule(int(round(payload.offset_s * US)), "poll", payload)
            elif kind == "poll":
                req = build_read_request(ALL_NODES, net.next_handle(payload.ip))
                net.exchange(payload.ip, req, respond, ts, net.latency_us(lat_lo, lat_hi))
                schedule(ts + int(round(payload.poll_period_s * US)), "poll", payload)
            elif kind == "recon":
                for t_next, stage in _recon(net, payload, ts):
                    schedule(t_next, "recon_stage", stage)
            elif kind == "recon_stage":
                state = payload(net, image, state)

        state = step(state, dt, DEFAULT_PLANT)
        check_invariants(state, DEFAULT_PLANT, tol=1e-6)
        max_err = max(max_err, abs(state.total() - DEFAULT_PLANT.total_volume))

    timeline = Timeline(dt, t_arr, pump_arr, valve_arr, flow_arr, temp_arr)
    records = _label_firmware_windows(finalize(net.raw), attacks)
    clean_records = [PacketRecord(r.ts_us, r.data, r.opcua_index) for r in records]
    for attack_id, spec in attacks:
        if spec.approach is Approach.SYNTHETIC:
            records = inject(records, spec, attack_id)
    result = RunResult(config, clean_records, records, timeline, _attack_labels(records, attacks),
                       max_conservation_error=max_err, firmware_log=firmware_log)
    if any(o.type == "wav" for o in config.outputs):
        result.audio = synth_audio(timeline, rng)
    result.summary = summarize(result)
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def _label_firmware_windows(records, attacks):
    """Label every unlabeled packet sent inside a firmware window [t0, t1)."""
    out = []
    windows = [(int(round(s.window[0] * US)), int(round(s.window[1] * US)), i, s.name)
               for i, s in attacks if s.approach is Approach.BEHAVIORAL and s.kind is not Kind.RECON_SWEEP]
    for rec in records:
        label = None
        if rec.attack_id == 0:
            for t0, t1, aid, name in windows:
                if t0 <= rec.ts_us < t1:
                    label = (aid, name)
                    break
        out.append(rec.labeled(*label) if label else rec)
    return out


def _attack_labels(records, attacks):
    labels = []
    for attack_id, spec in attacks:
        idx = [i for i, r in enumerate(records) if r.attack_id == attack_id]
        if spec.approach is Approach.SYNTHETIC:
            span, unit = tuple(spec.window), "opcua_index"
        elif idx:
            span, unit = (records[idx[0]].ts_us / US, records[idx[-1]].ts_us / US), "time_s"
        else:
            span, unit = tuple(spec.window), "time_s"
        scenario = 1 if spec.approach is Approach.SYNTHETIC else (3 if spec.kind in (
            Kind.DRY_RUN_PUMP, Kind.VALVE_STUCK_OPEN) else 2)
        labels.append(AttackLabel(attack_id, spec.name, scenario, span, unit))
    return labels


def _recon(net, hook, ts):
    """ARP sweep now; returns the later stages as (ts, callable) pairs."""
    attacker = net.hosts[ATTACKER_IP]
    tag = (hook.attack_id, hook.name)
    interval = int(round(ARP_INTERVAL_S * US))
    records, responders = arp_sweep(attacker, net.hosts, ts, interval)
    net.emit(records, tag)
    t_probe = ts + 254 * interval + 500_000

    def probes(net, image, state):
        t = t_probe
        for host in responders:
            listening = host.ip == PLC_IP
            sport = net.rng.integer(49152, 65536)
            isn = net.rng.integer(0, 2**32)
            server_isn = net.rng.integer(0, 2**32) if listening else 0
            pkts = syn_probe(attacker, host, sport, OPCUA_PORT, isn, t, listening, server_isn)
            net.emit(pkts, tag)
            if listening:
                seg = tcp_segment(attacker.ip, host.ip, sport, OPCUA_PORT, isn + 1, 0, RST)
                ip = ipv4_packet(attacker.ip, host.ip, seg, attacker.next_ip_id(), attacker.ttl)
                net.emit([(t + 400, ethernet(host.mac, attacker.mac, ETH_IPV4, ip))], tag)
            t += 200_000
        return state

    t_session = t_probe + len(responders) * 200_000 + 1_000_000

    def session(net, image, state):
        net.open_session(ATTACKER_IP, t_session, tag)
        req = build_read_request(ALL_NODES, net.next_handle(ATTACKER_IP))
        net.exchange(ATTACKER_IP, req,
                     lambda r: build_read_response(r.handle, _reported_values(image.nodes)),
                     t_session + 500_000, 3000, tag)
        return state

    t_write = t_session + 1_000_000

    def write(net, image, state):
        target = not image.nodes[NodeId.M101]
        req = build_write_request(net.next_handle(ATTACKER_IP), {NodeId.M101: target})
        net.exchange(ATTACKER_IP, req, lambda r: build_write_response(r.handle, r.values),
                     t_write, 3000, tag)
        return actuate(state, target, state.valve_open)

    t_close = t_write + 500_000

    def close(net, image, state):
        sess = net.sessions[ATTACKER_IP]
        net.emit([sess.send(True, encode_frame(Frame("CLO")), t_close),
                  sess.ack(False, t_close + 300)], tag)
        net.emit(sess.close(t_close + 100_000), tag)
        return state

    return [(t_probe, probes), (t_session, session), (t_write, write), (t_close, close)]


# ---------------------------------------------------------------- outputs

def _select(records, out):
    sel = records
    if out.client is not None:
        sel = [r for r in sel if _involves(r.data, out.client)]
    if out.t_range is not None:
        t0, t1 = (int(round(v * US)) for v in out.t_range)
        sel = [r for r in sel if t0 <= r.ts_us < t1]
    if sel is not records:
        sel = reindex(sel)
    return sel


def _involves(data, ip):
    pkt = parse_packet(data)
    return ip in (pkt.src_ip, pkt.dst_ip, pkt.arp_sender_ip, pkt.arp_target_ip)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def summarize(result):
    records = result.records
    config = result.config
    opcua = sum(1 for r in records if r.opcua_index is not None)
    attacks = []
    for label in result.labels:
        idx = [i for i, r in enumerate(records) if r.attack_id == label.attack_id]
        ops = [records[i].opcua_index for i in idx if records[i].opcua_index is not None]
        attacks.append({
            **label.as_dict(),
            "spec": config.attacks[label.attack_id - 1].to_text(),
            "packets": len(idx),
            "packet_span": [idx[0], idx[-1]] if idx else None,
            "opcua_span": [min(ops), max(ops)] if ops else None,
            "time_span_s": [records[idx[0]].ts_us / US, records[idx[-1]].ts_us / US] if idx else None,
        })
    return {
        "tool": "scadasim",
        "version": __version__,
        "scenario": config.name,
        "seed": int(config.seed),
        "rng": ALGORITHM,
        "duration_s": config.duration_s,
        "warmup_s": config.warmup_s,
        "packets": len(records),
        "opcua_packets": opcua,
        "benign_packets": sum(1 for r in records if r.attack_id == 0),
        "attacks": attacks,
        "files": {},
    }


def write_outputs(result, out_dir):
    config = result.config
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    if not os.access(out_dir, os.W_OK):
        raise OSError(f"output directory {out_dir} is not writable")
    summary_files = []
    for out in config.outputs:
        path = os.path.join(out_dir, out.file)
        if out.type == "pcap":
            base = result.clean if out.stage == "clean" else result.records
            selected = _select(base, out)
            write_pcap(path, selected)
            result.summary["files"][out.file] = {"type": "pcap", "packets": len(selected)}
        elif out.type == "labels":
            write_labels(path, result.records)
            result.summary["files"][out.file] = {"type": "labels", "rows": len(result.records)}
        elif out.type == "wav":
            write_wav(path, result.audio)
            result.summary["files"][out.file] = {"type": "wav", "samples": int(len(result.audio))}
        elif out.type == "sidechannel":
            write_sidechannel_csv(path, result.timeline)
            result.summary["files"][out.file] = {"type": "sidechannel", "rows": len(result.timeline.t)}
        elif out.type == "summary":
            summary_files.append(path)
            continue
        result.summary["files"][out.file]["sha256"] = sha256_file(path)
        result.files[out.file] = path
    for path in summary_files:
        with open(path, "w") as fh:
            json.dump(result.summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        result.files[os.path.basename(path)] = path
    return result.files
