/**
 * Keyboard-first review: hotkeys cover the whole confirm/relabel/edit/
 * remove loop so an annotator never needs the mouse.
 */

export type Command =
  | 'next'
  | 'previous'
  | 'confirm'
  | 'remove'
  | 'relabel'
  | 'edit'
  | 'dismiss';

export const DEFAULT_KEYMAP: Record<string, Command> = {
  j: 'next',
  ArrowDown: 'next',
  k: 'previous',
  ArrowUp: 'previous',
  c: 'confirm',
  Enter: 'confirm',
  x: 'remove',
  r: 'relabel',
  e: 'edit',
  Escape: 'dismiss',
};

export interface KeyLike {
  key: string;
  targetIsEditable: boolean;
}

export function commandForKey(event: KeyLike, keymap = DEFAULT_KEYMAP): Command | null {
  if (event.targetIsEditable && event.key !== 'Escape') return null;
  return keymap[event.key] ?? null;
}

export function isEditableTarget(target: EventTarget | null): boolean {
  return (
    target instanceof HTMLInputElement ||
    target instanceof HTMLTextAreaElement ||
    (target instanceof HTMLElement && target.isContentEditable)
  );
}
