# Package marker for test-time imports.
