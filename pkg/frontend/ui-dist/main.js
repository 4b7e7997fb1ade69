import { ApiClient } from './api.js';
import { SessionController } from './app.js';
import { DomView } from './view.js';
function bootstrap(doc) {
    const form = doc.getElementById('join-form');
    const studyInput = doc.getElementById('study-id');
    const evaluatorInput = doc.getElementById('evaluator-id');
    const root = doc.getElementById('app');
    const view = new DomView(doc, root);
    const controller = new SessionController(new ApiClient(''), view);
    view.onSubmit = () => void controller.submit();
    form.addEventListener('submit', (event) => {
        event.preventDefault();
        const studyId = studyInput.value.trim();
        const evaluatorId = evaluatorInput.value.trim();
        if (!studyId || !evaluatorId)
            return;
        form.classList.add('hidden');
        void controller.join(studyId, evaluatorId);
    });
}
bootstrap(document);
