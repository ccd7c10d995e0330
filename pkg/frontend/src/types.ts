// Response shapes of the KB service JSON API.

export interface Evidence {
  source: string;
  local_confidence: number;
  frequency: number;
  first_seen: number;
  last_seen: number;
}

export interface Triple {
  id: number;
  subject: string;
  predicate: string;
  object: string;
  confidence: number;
  status: string;
  inverse_of: number | null;
  evidence: Evidence[];
}

export interface TripleList {
  triples: Triple[];
  next_cursor: string | null;
  total: number;
}

export interface TripleInsert {
  subject: string;
  predicate: string;
  object: string;
  subject_type?: string;
  object_type?: string;
}

export interface Stats {
  triples_total: number;
  triples_validated: number;
  triples_invalidated: number;
  concepts_total: number;
  concepts_induced: number;
  mutex_sets_total: number;
  confidence_histogram: number[];
  per_source_counts: Record<string, number>;
}

export interface Iteration {
  outer_index: number;
  inner_index: number;
  triples_total: number;
  triples_new: number;
  concepts_total: number;
  subconcepts_new: number;
  mutex_sets_new: number;
  invalidated_total: number;
  confidence_histogram: number[];
  per_source_counts: Record<string, number>;
}

export interface IterationList {
  iterations: Iteration[];
}

export interface HierarchyNode {
  id: number;
  label: string;
  provenance: string;
  kind: string;
  children: HierarchyNode[];
}

export interface Hierarchy {
  roots: HierarchyNode[];
}

export interface MutexMember {
  predicate: string | null;
  concept_id: number;
  concept_label: string;
}

export interface MutexSet {
  id: number;
  members: MutexMember[];
  provenance: string;
  confidence: number;
}

export interface MutexList {
  mutex_sets: MutexSet[];
}

export type Role = "viewer" | "curator";
