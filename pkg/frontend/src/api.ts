// Typed client for the study service API.  The server owns all randomization
// and canonical identities; this client only ever sees opaque slot labels.

export type Choice = "A" | "B" | "difficult";

export interface GroupPayload {
  group_id: string;
  gt_url: string;
  a_url: string;
  b_url: string;
  answered: number;
  total: number;
  batch?: number;
  batch_size?: number;
}

export interface DonePayload {
  done: true;
  answered: number;
  total: number;
}

export type NextPayload = GroupPayload | DonePayload;

export interface Vote {
  group_id: string;
  subject_id: string;
  choice: Choice;
}

export type PostResult = "recorded" | "duplicate";

export function isDone(payload: NextPayload): payload is DonePayload {
  return (payload as DonePayload).done === true;
}

export class StudyApi {
  constructor(private readonly base: string = "") {}

  url(path: string): string {
    return this.base + path;
  }

  async next(subjectId: string): Promise<NextPayload> {
    const resp = await fetch(this.url(`/api/session/${encodeURIComponent(subjectId)}/next`));
    if (!resp.ok) {
      throw new Error(`next-group request failed: HTTP ${resp.status}`);
    }
    return (await resp.json()) as NextPayload;
  }

  async vote(vote: Vote): Promise<PostResult> {
    const resp = await fetch(this.url("/api/votes"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(vote),
    });
    if (resp.status === 201) return "recorded";
    if (resp.status === 409) return "duplicate";
    throw new Error(`vote request failed: HTTP ${resp.status}`);
  }
}
