/** DOM rendering. Question and explanation text land in textContent verbatim. */
import { CHOICES, RATING_DIMENSIONS, RATING_LEVELS, RATING_TITLES } from './state.js';
export class DomView {
    constructor(doc, root) {
        this.doc = doc;
        this.root = root;
        this.onSubmit = () => undefined;
    }
    clear() {
        this.root.innerHTML = '';
    }
    el(tag, className, text) {
        const node = this.doc.createElement(tag);
        if (className)
            node.className = className;
        if (text !== undefined)
            node.textContent = text;
        return node;
    }
    radioRow(name, options, onPick) {
        const row = this.el('div', 'options');
        for (const option of options) {
            const label = this.el('label', 'option');
            const input = this.el('input');
            input.type = 'radio';
            input.name = name;
            input.value = option;
            input.addEventListener('change', () => {
                if (input.checked)
                    onPick(option);
            });
            label.appendChild(input);
            label.appendChild(this.doc.createTextNode(option));
            row.appendChild(label);
        }
        return row;
    }
    showItem(item, state) {
        this.clear();
        const card = this.el('section', 'item');
        card.appendChild(this.el('div', 'progress', `Item ${item.index + 1} of ${item.total}`));
        card.appendChild(this.el('div', 'blinded-label', `Explanation ${item.blinded_label ?? '?'}`));
        const explanation = this.el('pre', 'explanation');
        explanation.textContent = item.explanation ?? '';
        card.appendChild(explanation);
        const submit = this.el('button', 'submit', 'Submit answers');
        submit.disabled = true;
        const refresh = () => {
            submit.disabled = !state.complete;
        };
        const questions = this.el('ol', 'questions');
        for (const q of item.questions ?? []) {
            const entry = this.el('li', 'question');
            entry.appendChild(this.el('p', 'question-text', q.text));
            entry.appendChild(this.radioRow(q.id, CHOICES, (choice) => {
                state.setChoice(q.id, choice);
                refresh();
            }));
            questions.appendChild(entry);
        }
        card.appendChild(questions);
        const ratings = this.el('fieldset', 'ratings');
        ratings.appendChild(this.el('legend', undefined, 'Rate this explanation'));
        for (const dim of RATING_DIMENSIONS) {
            const row = this.el('div', 'rating');
            row.appendChild(this.el('span', 'rating-name', RATING_TITLES[dim]));
            row.appendChild(this.radioRow(`rating-${dim}`, RATING_LEVELS, (level) => {
                state.setRating(dim, level);
                refresh();
            }));
            ratings.appendChild(row);
        }
        card.appendChild(ratings);
        const hint = this.el('p', 'validation-hint', '');
        card.appendChild(hint);
        submit.addEventListener('click', () => this.onSubmit());
        card.appendChild(submit);
        this.root.appendChild(card);
    }
    showDone(total) {
        this.clear();
        const card = this.el('section', 'done');
        card.appendChild(this.el('h2', undefined, 'All done'));
        card.appendChild(this.el('p', undefined, `You completed all ${total} items. Thank you!`));
        this.root.appendChild(card);
    }
    showError(message, retry) {
        const existing = this.root.querySelector('.error-banner');
        if (existing)
            existing.remove();
        const banner = this.el('div', 'error-banner');
        banner.appendChild(this.el('span', undefined, `Request failed: ${message}`));
        const button = this.el('button', 'retry', 'Retry');
        button.addEventListener('click', () => {
            banner.remove();
            retry();
        });
        banner.appendChild(button);
        this.root.prepend(banner);
    }
    showValidation(missingQuestions, missingRatings) {
        const hint = this.root.querySelector('.validation-hint');
        if (!hint)
            return;
        const parts = [];
        if (missingQuestions.length > 0) {
            parts.push(`${missingQuestions.length} unanswered question(s)`);
        }
        if (missingRatings.length > 0) {
            parts.push(`missing ratings: ${missingRatings.join(', ')}`);
        }
        hint.textContent = `Please finish before submitting: ${parts.join('; ')}.`;
    }
}
