// Mirrors the service's JSON shapes exactly.

export type LabelValue = "high" | "low";
export type LabelState = LabelValue | "unlabeled";
export type FilterMode = "unlabeled" | "all";

export interface TripletView {
  triplet_id: string;
  style_ref: string;
  content_ref: string;
  target: string;
  style_url: string;
  content_url: string;
  target_url: string;
  label: LabelState;
  source: string;
  prompt: string;
}

export interface Progress {
  high: number;
  low: number;
  unlabeled: number;
  total: number;
}

export interface LabelAck {
  triplet_id: string;
  label: LabelValue;
  progress: Progress;
}

export interface Transport {
  fetchBatch(filter: FilterMode, page: number, pageSize: number): Promise<TripletView[]>;
  submitLabel(tripletId: string, label: LabelValue, curator: string): Promise<LabelAck>;
  fetchProgress(): Promise<Progress>;
}
