// The book's code snippets double as doc-tests so the guide can never
// drift from the library. Chapters are added here as they are written.
