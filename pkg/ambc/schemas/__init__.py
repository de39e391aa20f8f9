# Pydantic schemas: validated input and JSON output
