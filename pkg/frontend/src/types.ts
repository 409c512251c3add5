export type ReviewStatus = "pending" | "accepted" | "rejected";
export type Decision = "accepted" | "rejected";

export interface ClusterSummary {
  cluster_id: string;
  label: string;
  scene_id: string;
  frame_id: string;
  num_points: number;
  source: string;
  review: ReviewStatus;
  split: string;
}

export interface SourceBox {
  class: string;
  x_min: number;
  y_min: number;
  x_max: number;
  y_max: number;
  score: number | null;
}

export interface ClusterRecord extends ClusterSummary {
  points: number[][];
  source_box?: SourceBox | null;
  image_path?: string;
}

export interface Stats {
  total: number;
  pending: number;
  accepted: number;
  rejected: number;
}

export interface ClusterPage {
  items: ClusterSummary[];
  page: number;
  page_size: number;
  total: number;
}
