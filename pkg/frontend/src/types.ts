// Wire types for the query API. Field names match the JSON payloads exactly.

export interface Identifier {
  scheme: string;
  value: string;
}

export interface Author {
  family: string;
  given?: string;
}

export interface Resource {
  id: string;
  title: string;
  authors: Author[];
  year: number | null;
  language: string | null;
  typology: string;
  frbr_level: string;
  parent_id: string | null;
  identifiers: Identifier[];
  collections: string[];
  is_primary_source: boolean;
}

export interface ResourceListResponse {
  resource_id: string;
  results: Resource[];
}

export interface SearchResponse {
  results: Resource[];
}

export interface CoCitedResponse {
  resource_id: string;
  counts: Record<string, number>;
}

export interface CountResponse {
  resource_id: string;
  level: string;
  count: number;
}

export interface CitationContext {
  access: string;
  excerpt?: string;
  window?: string;
  group?: string;
}

export interface CoverageReport {
  language_shares: Record<string, number>;
  language_deltas: Record<string, number>;
  tvd: number;
  typology_counts: Record<string, number>;
  year_histogram: Record<string, number>;
  collection_counts: Record<string, number>;
}

export type FrbrLevel = 'item' | 'manifestation' | 'expression' | 'work';
export type CoCitationScope = 'publication' | 'proximal';

export const FRBR_LEVELS: FrbrLevel[] = [
  'item',
  'manifestation',
  'expression',
  'work',
];
