export type Action = "accept" | "reject" | "skip" | "retry";

/** Keyboard map shown in the footer; keys are KeyboardEvent.key values. */
export const SHORTCUTS: Record<string, Action> = {
  a: "accept",
  r: "reject",
  s: "skip",
  ArrowRight: "skip",
  Enter: "retry",
};

export function actionForKey(key: string): Action | null {
  return SHORTCUTS[key] ?? null;
}

export function shortcutHelp(): string {
  return "a accept · r reject · s / → skip · Enter retry failed verdict";
}
