import type {
  CitationContext,
  CoCitationScope,
  CoCitedResponse,
  CountResponse,
  CoverageReport,
  FrbrLevel,
  Resource,
  ResourceListResponse,
  SearchResponse,
} from './types';

/** Thrown for any non-2xx response; carries the HTTP status. */
export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

/**
 * The slice of the query API the explorer consumes. Views depend on this
 * interface so tests can substitute a mock.
 */
export interface QueryApi {
  search(title: string): Promise<SearchResponse>;
  resource(id: string): Promise<Resource>;
  backward(id: string): Promise<ResourceListResponse>;
  forward(id: string): Promise<ResourceListResponse>;
  cocited(id: string, scope: CoCitationScope): Promise<CoCitedResponse>;
  count(id: string, level: FrbrLevel): Promise<CountResponse>;
  context(citationId: string): Promise<CitationContext>;
  coverage(): Promise<CoverageReport>;
}

export class HttpQueryApi implements QueryApi {
  constructor(private baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.baseUrl + path);
    if (!resp.ok) {
      throw new ApiError(resp.status, `${resp.status} on ${path}`);
    }
    return (await resp.json()) as T;
  }

  search(title: string): Promise<SearchResponse> {
    return this.get(`/query/search?title=${encodeURIComponent(title)}`);
  }

  resource(id: string): Promise<Resource> {
    return this.get(`/resources/${encodeURIComponent(id)}`);
  }

  backward(id: string): Promise<ResourceListResponse> {
    return this.get(`/query/backward/${encodeURIComponent(id)}`);
  }

  forward(id: string): Promise<ResourceListResponse> {
    return this.get(`/query/forward/${encodeURIComponent(id)}`);
  }

  cocited(id: string, scope: CoCitationScope): Promise<CoCitedResponse> {
    return this.get(
      `/query/cocited/${encodeURIComponent(id)}?scope=${scope}`,
    );
  }

  count(id: string, level: FrbrLevel): Promise<CountResponse> {
    return this.get(`/query/count/${encodeURIComponent(id)}?level=${level}`);
  }

  context(citationId: string): Promise<CitationContext> {
    return this.get(
      `/citations/${encodeURIComponent(citationId)}/context`,
    );
  }

  coverage(): Promise<CoverageReport> {
    return this.get('/report/coverage');
  }
}
