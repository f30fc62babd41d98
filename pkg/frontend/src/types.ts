// Payload shapes of the range service API (docs/http-api.md).

export interface SegmentDoc {
  voltage_level: string;
  nominal_kv: number;
  buses: string[];
}

export interface PhysicalTopology {
  segments: SegmentDoc[];
  buses: { id: string; voltage_level: string; nominal_kv: number }[];
  branches: { id: string; from: string; to: string; kind: string; rating_a: number }[];
  switches: { id: string; from: string; to: string; kind: string }[];
  loads: { id: string; bus: string }[];
  sources: { id: string; bus: string; kind: string }[];
  tie_lines: string[];
}

export interface CyberTopology {
  subnetworks: { name: string; substation: string }[];
  hosts: { name: string; role: string; ip: string; subnetwork: string }[];
  switches: { name: string; subnetwork: string; wan: boolean }[];
  links: { a: string; b: string; latency_ticks: number }[];
}

export interface Topology {
  physical: PhysicalTopology;
  cyber: CyberTopology;
}

export interface PointEntry {
  id: string;
  display_name: string;
  unit: string;
  kind: string;
  writable: boolean;
  source: string;
  host: string | null;
  protocol: string | null;
  path: string;
  element: string | null;
  quantity: string | null;
}

export interface Snapshot {
  tick: number;
  converged: boolean;
  bus_voltage: Record<string, { v_pu: number; angle_rad: number }>;
  branch_flow: Record<string, { p_mw: number; q_mvar: number; i_a: number }>;
  switch_state: Record<string, string>;
  energized: Record<string, boolean>;
  source_p_mw: Record<string, number>;
  load_p_mw: Record<string, number>;
  points: Record<string, { value: unknown; tick: number }>;
}

export interface RangeEvent {
  tick: number;
  seq: number;
  category: string;
  payload: Record<string, unknown>;
}

export interface StreamFrame {
  tick: number;
  snapshot?: Snapshot;
  events?: RangeEvent[];
}

export interface AttackStepBody {
  action: string;
  [key: string]: unknown;
}
