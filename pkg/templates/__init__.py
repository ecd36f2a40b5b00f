# Report layout templates
