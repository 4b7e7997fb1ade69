/**
 * End-to-end: the real UI modules (DOM view + controller + fetch client)
 * complete a 2-item study against the real study service spawned as a
 * subprocess, and the submitted answers and ratings show up in its report.
 */

import { execFile, spawn, ChildProcess } from 'node:child_process';
import { mkdtemp, readFile } from 'node:fs/promises';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { promisify } from 'node:util';

import { Window } from 'happy-dom';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient, NextItem } from '../src/api.js';
import { SessionController } from '../src/app.js';
import { ItemFormState } from '../src/state.js';
import { DomView } from '../src/view.js';

const execFileP = promisify(execFile);

const PORT = 8900 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess;
let workDir: string;
let studyId: string;
const responseBodies: string[] = [];

const recordingFetch = async (url: string, init?: RequestInit): Promise<Response> => {
  const resp = await fetch(url, init);
  const text = await resp.text();
  responseBodies.push(text);
  return new Response(text, { status: resp.status, headers: resp.headers });
};

async function waitForService(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      await fetch(`${BASE}/api/sessions/none/next`);
      return;
    } catch {
      await new Promise((r) => setTimeout(r, 200));
    }
  }
  throw new Error('service did not come up');
}

function makeUi() {
  const window = new Window();
  const doc = window.document as unknown as Document;
  const root = doc.createElement('div');
  doc.body.appendChild(root);
  const view = new DomView(doc, root);
  const api = new ApiClient(BASE, recordingFetch);
  const controller = new SessionController(api, view);
  view.onSubmit = () => void controller.submit();
  return { window, doc, root, view, controller };
}

function pick(root: HTMLElement, group: string, value: string): void {
  const input = root.querySelector(
    `input[name="${group}"][value="${value}"]`,
  ) as HTMLInputElement;
  input.checked = true;
  input.dispatchEvent(new (input.ownerDocument!.defaultView as any).Event('change'));
}

function currentQuestions(root: HTMLElement): string[] {
  return [...root.querySelectorAll('.question')].map(
    (q) => (q.querySelector('input') as HTMLInputElement).name,
  );
}

function submitPostCount(): number {
  // submissions are the only POSTs answered with an "accepted" field
  return responseBodies.filter((b) => b.includes('"accepted"')).length;
}

beforeAll(async () => {
  workDir = await mkdtemp(join(tmpdir(), 'quiz-ui-e2e-'));
  const treePath = join(workDir, 'tree.json');
  await execFileP('dtexplain', ['train', '--data', 'iris', '--out', treePath]);

  service = spawn(
    'dtexplain',
    ['serve', '--port', String(PORT), '--store', join(workDir, 'store')],
    { stdio: ['ignore', 'pipe', 'pipe'] },
  );
  await waitForService();

  const tree = JSON.parse(await readFile(treePath, 'utf-8'));
  const created = await fetch(`${BASE}/api/studies`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({
      tree,
      dataset: { builtin: 'iris' },
      config: { seed: 5, num_samples: 1, mock: true },
    }),
  });
  expect(created.status).toBe(200);
  const body = await created.json();
  studyId = body.study_id;
  expect(body.item_count).toBe(2);
});

afterAll(() => {
  service?.kill();
});

describe('quiz UI against a live service', () => {
  const labelRatings: Record<string, Record<string, string>> = {};
  const labelChoices: Record<string, string> = {};

  it('completes a 2-item session end to end, blocking incomplete sheets', async () => {
    const { root, controller } = makeUi();
    await controller.join(studyId, 'ev-ui');

    // ---- item 1 rendered from live data
    let item = root.querySelector('.item');
    expect(item).not.toBeNull();
    expect(root.querySelector('.progress')!.textContent).toBe('Item 1 of 2');
    const firstLabel = root.querySelector('.blinded-label')!.textContent!.replace('Explanation ', '');
    expect(['A', 'B']).toContain(firstLabel);
    const questionIds = currentQuestions(root as HTMLElement);
    expect(questionIds.length).toBeGreaterThan(0);

    // ---- incomplete sheet: submit stays disabled and nothing is sent
    const submitButton = root.querySelector('button.submit') as HTMLButtonElement;
    pick(root as HTMLElement, questionIds[0], 'Unsure');
    expect(submitButton.disabled).toBe(true);
    const before = submitPostCount();
    ;(submitButton as HTMLButtonElement).click();
    const blocked = await controller.submit();
    expect(blocked).toBe(false);
    expect(submitPostCount()).toBe(before);

    // ---- fill everything in: all Unsure, ratings High/High/Medium
    for (const qid of questionIds) pick(root as HTMLElement, qid, 'Unsure');
    pick(root as HTMLElement, 'rating-readability', 'High');
    pick(root as HTMLElement, 'rating-quality', 'High');
    pick(root as HTMLElement, 'rating-background_knowledge', 'Medium');
    labelRatings[firstLabel] = {
      readability: 'High', quality: 'High', background_knowledge: 'Medium',
    };
    labelChoices[firstLabel] = 'Unsure';
    expect(submitButton.disabled).toBe(false);
    submitButton.click();
    await new Promise((r) => setTimeout(r, 300));
    expect(root.querySelector('.progress')!.textContent).toBe('Item 2 of 2');
  });

  it('resumes mid-session after a reload via the server cursor', async () => {
    // fresh window + controller = a browser reload; same evaluator id
    const { root, controller } = makeUi();
    await controller.join(studyId, 'ev-ui');
    expect(root.querySelector('.progress')!.textContent).toBe('Item 2 of 2');

    const secondLabel = root.querySelector('.blinded-label')!.textContent!.replace('Explanation ', '');
    const questionIds = currentQuestions(root as HTMLElement);
    for (const qid of questionIds) pick(root as HTMLElement, qid, 'True');
    pick(root as HTMLElement, 'rating-readability', 'Medium');
    pick(root as HTMLElement, 'rating-quality', 'Low');
    pick(root as HTMLElement, 'rating-background_knowledge', 'High');
    labelRatings[secondLabel] = {
      readability: 'Medium', quality: 'Low', background_knowledge: 'High',
    };
    labelChoices[secondLabel] = 'True';
    (root.querySelector('button.submit') as HTMLButtonElement).click();
    await new Promise((r) => setTimeout(r, 300));
    expect(root.querySelector('.done')).not.toBeNull();
    expect(root.querySelector('.done')!.textContent).toContain('all 2 items');
  });

  it('never exposed oracle fields to the client', () => {
    for (const body of responseBodies) {
      expect(body).not.toContain('correct_answer');
      expect(body).not.toContain('"oracle"');
    }
  });

  it('shows the submitted answers and ratings in the study report', async () => {
    const resp = await fetch(`${BASE}/api/studies/${studyId}/report`);
    expect(resp.status).toBe(200);
    const report = await resp.json();
    expect(report.evaluators).toEqual(['ev-ui']);

    const labelOf: Record<string, string> = report.blinding;
    for (const approach of ['rule', 'llm']) {
      const label = labelOf[approach];
      const entry = report.quiz_scores[approach];
      const mine = entry.per_evaluator['ev-ui'];
      expect(mine.total).toBe(entry.total);
      if (labelChoices[label] === 'Unsure') {
        expect(mine.correct).toBe(0); // Unsure is never correct
      } else {
        expect(mine.correct).toBeGreaterThanOrEqual(0);
        expect(mine.correct).toBeLessThanOrEqual(mine.total);
      }
      for (const [dim, level] of Object.entries(labelRatings[label])) {
        expect(report.ratings[approach][dim][level].mean).toBe(100);
      }
    }
  });
});
