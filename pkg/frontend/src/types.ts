// Payload types mirroring the review service API.

export type RelevanceType = 'irrelevant' | 'informative' | 'compliance';

export interface DocumentMeta {
  doc_id: string;
  title?: string;
  origin?: string;
  jurisdiction?: string;
  applicable_domain?: string;
  source_uri?: string | null;
}

export interface ParagraphView {
  body: string;
  section_title: string;
  subsection: string | null;
  group: string | null; // hidden by default in the UI
  document: DocumentMeta;
}

export interface NodeView {
  node_id: string;
  name: string;
  description: string;
  level: string;
  kind: string;
}

export interface ReviewItem {
  item_id: string;
  para_id: string;
  query_node_id: string;
  level: number;
  method: string;
  run_id: string;
  machine_score: number | null;
  machine_label: string | null;
  machine_justification: string | null;
  status: string;
  expert_label: string | null;
  decided_at: string | null;
  reviewer: string | null;
  paragraph?: ParagraphView;
  node?: NodeView;
  model_id?: string;
}

export interface Progress {
  pending: number;
  decided: number;
  per_level: Record<string, { pending: number; decided: number }>;
}

export interface QueuePage {
  items: ReviewItem[];
  page: number;
  page_size: number;
  total: number;
  progress: Progress;
}

export interface ProcessNode {
  node_id: string;
  level: string;
  name: string;
  description: string;
  parent_id: string | null;
  kind: string;
}

export interface ProcessModel {
  model_id: string;
  context: { location: string; domain: string; size: string };
  nodes: ProcessNode[];
  bpmn_xml?: string;
}

export type DecisionAction = 'confirm' | 'reject' | 'retype';

export interface DecisionRequest {
  action: DecisionAction;
  type?: RelevanceType;
  reviewer: string;
  idempotency_key: string;
}

export interface DecisionResult {
  item: ReviewItem;
  gold_delta: unknown;
}

export interface QueueFilters {
  status?: string;
  level?: number;
  method?: string;
}
