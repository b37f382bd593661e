/** Minimal dispatch loop around the reducer. */

import type { Action, ConsoleState } from "./state.js";
import { initialState, reduce } from "./state.js";

export type Listener = (state: ConsoleState) => void;

export class Store {
  private state: ConsoleState;
  private readonly listeners: Listener[] = [];

  constructor(initial: ConsoleState = initialState()) {
    this.state = initial;
  }

  getState(): ConsoleState {
    return this.state;
  }

  dispatch = (action: Action): void => {
    this.state = reduce(this.state, action);
    for (const listener of this.listeners) {
      listener(this.state);
    }
  };

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      const index = this.listeners.indexOf(listener);
      if (index >= 0) this.listeners.splice(index, 1);
    };
  }
}
