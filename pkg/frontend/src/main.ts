import { ApiClient } from './api.js';
import { SessionController } from './app.js';
import { DomView } from './view.js';

function bootstrap(doc: Document): void {
  const form = doc.getElementById('join-form') as HTMLFormElement;
  const studyInput = doc.getElementById('study-id') as HTMLInputElement;
  const evaluatorInput = doc.getElementById('evaluator-id') as HTMLInputElement;
  const root = doc.getElementById('app') as HTMLElement;

  const view = new DomView(doc, root);
  const controller = new SessionController(new ApiClient(''), view);
  view.onSubmit = () => void controller.submit();

  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const studyId = studyInput.value.trim();
    const evaluatorId = evaluatorInput.value.trim();
    if (!studyId || !evaluatorId) return;
    form.classList.add('hidden');
    void controller.join(studyId, evaluatorId);
  });
}

bootstrap(document);
