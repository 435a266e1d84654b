export interface Candidate {
  id: number;
  lat: number;
  lon: number;
  proximity: number;
  similarity: number;
  image_url?: string;
}

export interface RoundPayload {
  session_id: string;
  round: number;
  candidates: Candidate[];
  done?: false;
}

export interface ResultEntry {
  id: number;
  score: number;
  lat: number;
  lon: number;
  image_url?: string;
}

export interface DonePayload {
  session_id: string;
  done: true;
  results: ResultEntry[];
  rounds_used: number;
  p_hat: { p0: number; words: number[]; weights: number[] };
}

export type SessionPayload = RoundPayload | DonePayload;

export interface ObjectPayload {
  id: number;
  lat: number;
  lon: number;
  words: number[];
  image_url: string | null;
  tags: string[] | null;
}

export interface CreateSessionBody {
  lat: number;
  lon: number;
  words: number[];
  k?: number;
  theta?: number;
  lambda?: number;
  strategy?: string;
}

export interface HistoryEntry {
  round: number;
  chosenId: number;
  candidateIds: number[];
}

export interface QueryFormState {
  lat: number | null;
  lon: number | null;
  words: string;
  k: string;
  theta: string;
  strategy: string;
}

export interface AppState {
  view: "query" | "round" | "results";
  form: QueryFormState;
  sessionId: string | null;
  round: RoundPayload | null;
  results: DonePayload | null;
  history: HistoryEntry[];
  queryWords: number[];
  queryPoint: { lat: number; lon: number } | null;
  error: string | null;
  inFlight: boolean;
}

export function isDone(p: SessionPayload): p is DonePayload {
  return (p as DonePayload).done === true;
}
