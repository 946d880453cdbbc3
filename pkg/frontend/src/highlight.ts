/** Find the span of a transformed (matched) name inside a display name.
 *
 * Matching mirrors how candidates were generated: case is ignored and
 * non-word characters in the display name may be skipped, so "decix"
 * highlights the "DE-CIX" part of "DE-CIX Frankfurt". Spaces in the
 * needle stand for runs of skipped characters.
 */

export interface Span {
  start: number;
  end: number; // exclusive
}

const WORD = /[\p{L}\p{N}_]/u;

export function matchSpan(name: string, needle: string): Span | null {
  const compactNeedle = needle.toLowerCase().replace(/ /g, "");
  if (!compactNeedle) return null;
  const lower = name.toLowerCase();

  for (let start = 0; start < lower.length; start++) {
    if (lower[start] !== compactNeedle[0]) continue;
    let i = start;
    let j = 0;
    while (i < lower.length && j < compactNeedle.length) {
      const ch = lower[i]!;
      if (ch === compactNeedle[j]) {
        i++;
        j++;
      } else if (!WORD.test(ch)) {
        i++; // skip punctuation/whitespace between matched runs
      } else {
        break;
      }
    }
    if (j === compactNeedle.length) {
      return { start, end: i };
    }
  }
  return null;
}

const HTML_ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
  "'": "&#39;",
};

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => HTML_ESCAPES[ch] ?? ch);
}

/** Render a name with the matched substring wrapped in <mark>. */
export function highlightName(name: string, needle: string): string {
  const span = matchSpan(name, needle);
  if (span === null) return escapeHtml(name);
  return (
    escapeHtml(name.slice(0, span.start)) +
    "<mark>" +
    escapeHtml(name.slice(span.start, span.end)) +
    "</mark>" +
    escapeHtml(name.slice(span.end))
  );
}
